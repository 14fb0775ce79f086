#include "csifb/harness/config.hpp"

#include <fstream>
#include <sstream>

namespace csifb {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for '" + key + "': " + v);
    }
    if (pos != v.size())
        throw ConfigError("config: trailing junk for '" + key + "': " + v);
    return out;
}

long parse_long(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    const long l = static_cast<long>(d);
    if (static_cast<double>(l) != d)
        throw ConfigError("config: '" + key + "' must be an integer: " + v);
    return l;
}

int parse_int(const std::string& key, const std::string& v) {
    return static_cast<int>(parse_long(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: '" + key + "' must be a boolean: " + v);
}

std::vector<std::string> split_csv(const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    return parts;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    for (const auto& p : split_csv(v)) out.push_back(parse_double(key, p));
    if (out.empty()) throw ConfigError("config: '" + key + "' must be non-empty");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& p : split_csv(v)) out.push_back(parse_int(key, p));
    if (out.empty()) throw ConfigError("config: '" + key + "' must be non-empty");
    return out;
}

} // namespace

void ExperimentConfig::validate() const {
    sys.validate();
    if (epochs < 1) throw ConfigError("config: epochs must be >= 1");
    if (lr < 0.0) throw ConfigError("config: lr must be >= 0");
    if (batch < 2) throw ConfigError("config: batch must be >= 2");
    if (alpha1 < 0.0 || alpha2 < 0.0)
        throw ConfigError("config: regularization coefficients must be >= 0");
    if (beta < 1) throw ConfigError("config: beta must be >= 1");
    if (det_train < 1 || det_val < 1 || det_test < 1 || rec_train < 1 ||
        rec_val < 1 || rec_test < 1)
        throw ConfigError("config: dataset sizes must be positive");
    if (snr_db.empty()) throw ConfigError("config: snr_db must be non-empty");
    if (scheme != "proposed" && scheme != "baseline" && scheme != "both")
        throw ConfigError("config: scheme must be proposed|baseline|both");
    if (baseline_beta.empty())
        throw ConfigError("config: baseline_beta must be non-empty");
    for (int b : baseline_beta)
        if (b < 1) throw ConfigError("config: baseline_beta entries must be >= 1");
    if (baseline_iters < 1) throw ConfigError("config: baseline_iters must be >= 1");
    if (stop_errors < 1) throw ConfigError("config: stop_errors must be >= 1");
    if (max_frames < 1) throw ConfigError("config: max_frames must be >= 1");
    if (nmse_frames < 1) throw ConfigError("config: nmse_frames must be >= 1");
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "system" && section != "training" &&
                section != "eval" && section != "paths")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config: key '" + key + "' outside any section");

        if (section == "system") {
            if (key == "n") cfg.sys.N = parse_int(key, val);
            else if (key == "p") cfg.sys.P = parse_int(key, val);
            else if (key == "c") cfg.sys.c = parse_double(key, val);
            else if (key == "k") cfg.sys.K = parse_int(key, val);
            else if (key == "rho") cfg.sys.rho = parse_double(key, val);
            else if (key == "e_u") cfg.sys.E_u = parse_double(key, val);
            else if (key == "u") cfg.sys.U = parse_int(key, val);
            else if (key == "seed")
                cfg.sys.seed = static_cast<std::uint64_t>(parse_long(key, val));
            else
                throw ConfigError("config: unknown key '" + key + "' in [system]");
        } else if (section == "training") {
            if (key == "epochs") cfg.epochs = parse_int(key, val);
            else if (key == "lr") cfg.lr = parse_double(key, val);
            else if (key == "batch") cfg.batch = parse_int(key, val);
            else if (key == "alpha1") cfg.alpha1 = parse_double(key, val);
            else if (key == "alpha2") cfg.alpha2 = parse_double(key, val);
            else if (key == "beta") cfg.beta = parse_int(key, val);
            else if (key == "lrelu_slope") cfg.lrelu_slope = parse_double(key, val);
            else if (key == "det_train") cfg.det_train = parse_int(key, val);
            else if (key == "det_val") cfg.det_val = parse_int(key, val);
            else if (key == "det_test") cfg.det_test = parse_int(key, val);
            else if (key == "rec_train") cfg.rec_train = parse_int(key, val);
            else if (key == "rec_val") cfg.rec_val = parse_int(key, val);
            else if (key == "rec_test") cfg.rec_test = parse_int(key, val);
            else
                throw ConfigError("config: unknown key '" + key + "' in [training]");
        } else if (section == "eval") {
            if (key == "snr_db") cfg.snr_db = parse_double_list(key, val);
            else if (key == "scheme") cfg.scheme = val;
            else if (key == "baseline_beta") cfg.baseline_beta = parse_int_list(key, val);
            else if (key == "baseline_iters") cfg.baseline_iters = parse_int(key, val);
            else if (key == "stop_errors") cfg.stop_errors = parse_long(key, val);
            else if (key == "max_frames") cfg.max_frames = parse_long(key, val);
            else if (key == "nmse_frames") cfg.nmse_frames = parse_long(key, val);
            else if (key == "report_wall_clock") cfg.report_wall_clock = parse_bool(key, val);
            else
                throw ConfigError("config: unknown key '" + key + "' in [eval]");
        } else {  // paths
            if (key == "det_checkpoint") cfg.det_checkpoint = val;
            else if (key == "rec_checkpoint") cfg.rec_checkpoint = val;
            else if (key == "results") cfg.results = val;
            else
                throw ConfigError("config: unknown key '" + key + "' in [paths]");
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace csifb

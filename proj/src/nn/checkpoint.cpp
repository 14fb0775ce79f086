#include "csifb/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace csifb::nn {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'F', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindDetection = 1;
constexpr std::uint32_t kKindRefinement = 2;

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Writer {
    std::vector<std::uint8_t> buf;

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf.insert(buf.end(), b, b + n);
    }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void tensor(const double* p, Eigen::Index n) {
        raw(p, static_cast<std::size_t>(n) * sizeof(double));
    }
};

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    void raw(void* out, std::size_t n) {
        if (n > left)
            throw CheckpointError(CheckpointFault::DimsMismatch,
                                  "checkpoint payload shorter than its header claims");
        std::memcpy(out, p, n);
        p += n;
        left -= n;
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    double f64() { double v; raw(&v, sizeof v); return v; }
    void tensor(double* out, Eigen::Index n) {
        raw(out, static_cast<std::size_t>(n) * sizeof(double));
    }
};

void write_subnet(Writer& w, const SubnetParams& p) {
    w.u32(static_cast<std::uint32_t>(p.in()));
    w.u32(static_cast<std::uint32_t>(p.hidden()));
    w.u32(static_cast<std::uint32_t>(p.out()));
    w.u32(p.out_act == OutAct::Tanh ? 0 : 1);
    w.f64(p.lrelu_slope);
    w.tensor(p.W1.data(), p.W1.size());
    w.tensor(p.b1.data(), p.b1.size());
    w.tensor(p.W2.data(), p.W2.size());
    w.tensor(p.b2.data(), p.b2.size());
    w.tensor(p.bn_gamma.data(), p.bn_gamma.size());
    w.tensor(p.bn_beta.data(), p.bn_beta.size());
    w.tensor(p.bn_mean.data(), p.bn_mean.size());
    w.tensor(p.bn_var.data(), p.bn_var.size());
}

SubnetParams read_subnet(Reader& r) {
    SubnetParams p;
    const std::uint32_t in = r.u32();
    const std::uint32_t hidden = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint32_t act = r.u32();
    if (in == 0 || hidden == 0 || out == 0 || act > 1 || in > (1u << 24) ||
        hidden > (1u << 24) || out > (1u << 24))
        throw CheckpointError(CheckpointFault::DimsMismatch,
                              "checkpoint subnet header is implausible");
    p.out_act = act == 0 ? OutAct::Tanh : OutAct::Linear;
    p.lrelu_slope = r.f64();
    p.W1.resize(hidden, in);
    p.b1.resize(hidden);
    p.W2.resize(out, hidden);
    p.b2.resize(out);
    p.bn_gamma.resize(in);
    p.bn_beta.resize(in);
    p.bn_mean.resize(in);
    p.bn_var.resize(in);
    r.tensor(p.W1.data(), p.W1.size());
    r.tensor(p.b1.data(), p.b1.size());
    r.tensor(p.W2.data(), p.W2.size());
    r.tensor(p.b2.data(), p.b2.size());
    r.tensor(p.bn_gamma.data(), p.bn_gamma.size());
    r.tensor(p.bn_beta.data(), p.bn_beta.size());
    r.tensor(p.bn_mean.data(), p.bn_mean.size());
    r.tensor(p.bn_var.data(), p.bn_var.size());
    return p;
}

void write_file(const std::string& path, Writer& w) {
    const std::uint64_t sum = fnv1a64(w.buf.data(), w.buf.size());
    w.u64(sum);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open checkpoint for writing: " + path);
    f.write(reinterpret_cast<const char*>(w.buf.data()),
            static_cast<std::streamsize>(w.buf.size()));
    if (!f) throw DataError("failed writing checkpoint: " + path);
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw DataError("cannot open checkpoint: " + path);
    const std::streamsize n = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(n));
    f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw DataError("failed reading checkpoint: " + path);
    return buf;
}

// Verifies magic / version / checksum, returns a reader over the payload
// (everything between the version field and the trailing checksum).
Reader open_payload(const std::vector<std::uint8_t>& buf,
                    std::uint32_t expect_kind) {
    if (buf.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t))
        throw CheckpointError(CheckpointFault::BadChecksum,
                              "checkpoint file truncated");
    if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw CheckpointError(CheckpointFault::BadMagic,
                              "not a checkpoint file (bad magic)");
    std::uint32_t version;
    std::memcpy(&version, buf.data() + sizeof kMagic, sizeof version);
    if (version != kVersion)
        throw CheckpointError(CheckpointFault::BadVersion,
                              "unsupported checkpoint version " +
                                  std::to_string(version));
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - sizeof stored, sizeof stored);
    if (fnv1a64(buf.data(), buf.size() - sizeof stored) != stored)
        throw CheckpointError(CheckpointFault::BadChecksum,
                              "checkpoint checksum mismatch (corrupt or truncated)");
    Reader r{buf.data() + sizeof(kMagic) + sizeof(std::uint32_t),
             buf.size() - sizeof(kMagic) - sizeof(std::uint32_t) -
                 sizeof(std::uint64_t)};
    const std::uint32_t kind = r.u32();
    if (kind != expect_kind)
        throw CheckpointError(CheckpointFault::DimsMismatch,
                              "checkpoint holds a different network kind");
    return r;
}

} // namespace

void save_checkpoint(const DetectionNetwork& net, const std::string& path) {
    if (!net.initialized())
        throw std::logic_error("save_checkpoint: uninitialized detection network");
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(kKindDetection);
    w.u32(static_cast<std::uint32_t>(net.L));
    w.u32(static_cast<std::uint32_t>(net.P));
    w.f64(net.rho);
    w.f64(net.E_u);
    for (int i = 0; i < 3; ++i) {
        write_subnet(w, net.csi_nets[i]);
        write_subnet(w, net.det_nets[i]);
    }
    write_file(path, w);
}

void save_checkpoint(const RefinementNetwork& net, const std::string& path) {
    if (!net.initialized())
        throw std::logic_error("save_checkpoint: uninitialized refinement network");
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(kKindRefinement);
    w.u32(static_cast<std::uint32_t>(net.N));
    write_subnet(w, net.net);
    write_file(path, w);
}

DetectionNetwork load_detection_checkpoint(const std::string& path) {
    const auto buf = read_file(path);
    Reader r = open_payload(buf, kKindDetection);
    DetectionNetwork net;
    net.L = static_cast<int>(r.u32());
    net.P = static_cast<int>(r.u32());
    net.rho = r.f64();
    net.E_u = r.f64();
    for (int i = 0; i < 3; ++i) {
        net.csi_nets[i] = read_subnet(r);
        net.det_nets[i] = read_subnet(r);
    }
    if (r.left != 0)
        throw CheckpointError(CheckpointFault::DimsMismatch,
                              "checkpoint has trailing bytes");
    for (int i = 0; i < 3; ++i) {
        if (net.csi_nets[i].in() != 2 * net.L ||
            net.csi_nets[i].hidden() != 4 * net.L ||
            net.csi_nets[i].out() != 2 * net.L ||
            net.det_nets[i].in() != 2 * net.P ||
            net.det_nets[i].hidden() != 4 * net.P ||
            net.det_nets[i].out() != 2 * net.P)
            throw CheckpointError(CheckpointFault::DimsMismatch,
                                  "checkpoint subnet dims inconsistent with L/P");
    }
    return net;
}

RefinementNetwork load_refinement_checkpoint(const std::string& path) {
    const auto buf = read_file(path);
    Reader r = open_payload(buf, kKindRefinement);
    RefinementNetwork net;
    net.N = static_cast<int>(r.u32());
    net.net = read_subnet(r);
    if (r.left != 0)
        throw CheckpointError(CheckpointFault::DimsMismatch,
                              "checkpoint has trailing bytes");
    if (net.net.in() != 2 * net.N || net.net.hidden() != 4 * net.N ||
        net.net.out() != 2 * net.N)
        throw CheckpointError(CheckpointFault::DimsMismatch,
                              "checkpoint subnet dims inconsistent with N");
    return net;
}

DetectionNetwork load_detection_checkpoint(const std::string& path,
                                           const SystemConfig& cfg) {
    DetectionNetwork net = load_detection_checkpoint(path);
    if (net.L != cfg.L() || net.P != cfg.P || net.rho != cfg.rho ||
        net.E_u != cfg.E_u)
        throw CheckpointError(
            CheckpointFault::DimsMismatch,
            "detection checkpoint was trained for a different config: " + path);
    return net;
}

RefinementNetwork load_refinement_checkpoint(const std::string& path,
                                             const SystemConfig& cfg) {
    RefinementNetwork net = load_refinement_checkpoint(path);
    if (net.N != cfg.N)
        throw CheckpointError(
            CheckpointFault::DimsMismatch,
            "refinement checkpoint was trained for a different config: " + path);
    return net;
}

} // namespace csifb::nn

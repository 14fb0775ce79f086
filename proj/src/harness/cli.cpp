#include "csifb/harness/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "csifb/harness/config.hpp"
#include "csifb/harness/dataset.hpp"
#include "csifb/harness/experiment.hpp"
#include "csifb/nn/checkpoint.hpp"

namespace csifb {

namespace {

using nlohmann::json;

json config_json(const ExperimentConfig& cfg) {
    json j;
    j["system"] = {{"n", cfg.sys.N},     {"p", cfg.sys.P},
                   {"c", cfg.sys.c},     {"k", cfg.sys.K},
                   {"rho", cfg.sys.rho}, {"e_u", cfg.sys.E_u},
                   {"u", cfg.sys.U},     {"seed", cfg.sys.seed},
                   {"m", cfg.sys.M()},   {"l", cfg.sys.L()}};
    j["training"] = {{"epochs", cfg.epochs},
                     {"lr", cfg.lr},
                     {"batch", cfg.batch},
                     {"alpha1", cfg.alpha1},
                     {"alpha2", cfg.alpha2},
                     {"beta", cfg.beta},
                     {"lrelu_slope", cfg.lrelu_slope},
                     {"det_sizes", {cfg.det_train, cfg.det_val, cfg.det_test}},
                     {"rec_sizes", {cfg.rec_train, cfg.rec_val, cfg.rec_test}}};
    // Defaults that the config file cannot change but a rerun needs to know.
    j["fixed"] = {{"bn_eps", nn::kBnEps},
                  {"bn_momentum", nn::kBnMomentum},
                  {"adam_beta1", 0.9},
                  {"adam_beta2", 0.999},
                  {"adam_eps", 1e-8},
                  {"weight_init", "glorot-uniform"},
                  {"training_noise", "noise-free"}};
    return j;
}

void write_loss_csv(const std::string& path, const std::vector<double>& train,
                    const std::vector<double>& val) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open loss history for writing: " + path);
    f << "epoch,train_loss,val_loss\n";
    char buf[128];
    for (std::size_t i = 0; i < train.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", i + 1, train[i],
                      val[i]);
        f << buf;
    }
}

void write_metadata(const std::string& ckpt_path, const ExperimentConfig& cfg,
                    const std::string& kind, int best_epoch) {
    json j = config_json(cfg);
    j["kind"] = kind;
    j["best_epoch"] = best_epoch;
    std::ofstream f(ckpt_path + ".meta.json", std::ios::trunc);
    if (!f) throw DataError("cannot write metadata next to " + ckpt_path);
    f << j.dump(2) << "\n";
}

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;

    ExperimentConfig load() const {
        ExperimentConfig cfg = load_config_file(config_path);
        if (seed_set) cfg.sys.seed = seed;
        return cfg;
    }
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", args.seed, "override the master seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

DetectionNetwork run_train_det(const ExperimentConfig& cfg,
                               const std::string& data_path,
                               const std::string& out) {
    const ExperimentContext ctx = make_context(cfg.sys);
    DetectionDataset train, val;
    if (!data_path.empty()) {
        DetectionDataset all = load_detection_dataset(data_path);
        if (all.size() < cfg.det_train + cfg.det_val)
            throw DataError("dataset too small for det_train + det_val");
        train.x = all.x.leftCols(cfg.det_train);
        train.d = all.d.leftCols(cfg.det_train);
        train.w = all.w.leftCols(cfg.det_train);
        val.x = all.x.middleCols(cfg.det_train, cfg.det_val);
        val.d = all.d.middleCols(cfg.det_train, cfg.det_val);
        val.w = all.w.middleCols(cfg.det_train, cfg.det_val);
    } else {
        train = build_detection_dataset(ctx, cfg.det_train, stream::kDetTrain);
        val = build_detection_dataset(ctx, cfg.det_val, stream::kDetVal);
    }
    DetectorTrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.lr = cfg.lr;
    opt.batch = cfg.batch;
    opt.alpha1 = cfg.alpha1;
    opt.lrelu_slope = cfg.lrelu_slope;
    TrainLog log;
    Rng rng = make_stream(cfg.sys.seed, stream::kDetInit);
    DetectionNetwork net = train_detector(train, val, cfg.sys, opt, rng, &log);
    nn::save_checkpoint(net, out);
    write_loss_csv(out + ".loss.csv", log.train_loss, log.val_loss);
    write_metadata(out, cfg, "detection", log.best_epoch);
    std::cout << "trained detection network -> " << out << " (best epoch "
              << log.best_epoch + 1 << ", val loss "
              << log.val_loss[log.best_epoch] << ")\n";
    return net;
}

RefinementNetwork run_train_rec(const ExperimentConfig& cfg,
                                const DetectionNetwork& det,
                                const std::string& data_path,
                                const std::string& out) {
    const ExperimentContext ctx = make_context(cfg.sys);
    ReconstructionDataset train, val;
    if (!data_path.empty()) {
        ReconstructionDataset all = load_reconstruction_dataset(data_path);
        if (all.size() < cfg.rec_train + cfg.rec_val)
            throw DataError("dataset too small for rec_train + rec_val");
        train.x = all.x.leftCols(cfg.rec_train);
        train.h = all.h.leftCols(cfg.rec_train);
        val.x = all.x.middleCols(cfg.rec_train, cfg.rec_val);
        val.h = all.h.middleCols(cfg.rec_train, cfg.rec_val);
    } else {
        train = build_reconstruction_dataset(ctx, det, cfg.rec_train,
                                             stream::kRecTrain, cfg.beta);
        val = build_reconstruction_dataset(ctx, det, cfg.rec_val,
                                           stream::kRecVal, cfg.beta);
    }
    RefinerTrainOptions opt;
    opt.epochs = cfg.epochs;
    opt.lr = cfg.lr;
    opt.batch = cfg.batch;
    opt.alpha2 = cfg.alpha2;
    opt.lrelu_slope = cfg.lrelu_slope;
    RefinerTrainLog log;
    Rng rng = make_stream(cfg.sys.seed, stream::kRecInit);
    RefinementNetwork net = train_refiner(train, val, cfg.sys, opt, rng, &log);
    nn::save_checkpoint(net, out);
    write_loss_csv(out + ".loss.csv", log.train_loss, log.val_loss);
    write_metadata(out, cfg, "refinement", log.best_epoch);
    std::cout << "trained refinement network -> " << out << " (best epoch "
              << log.best_epoch + 1 << ", val loss "
              << log.val_loss[log.best_epoch] << ")\n";
    return net;
}

void run_eval(const ExperimentConfig& cfg, const std::string& det_path,
              const std::string& rec_path, const std::string& out) {
    const bool want_proposed = cfg.scheme != "baseline";
    DetectionNetwork det;
    RefinementNetwork rec;
    if (want_proposed) {
        const std::string dp = det_path.empty() ? cfg.det_checkpoint : det_path;
        const std::string rp = rec_path.empty() ? cfg.rec_checkpoint : rec_path;
        if (dp.empty())
            throw DataError("eval: no detection checkpoint given "
                            "(--det or [paths] det_checkpoint)");
        if (rp.empty())
            throw DataError("eval: no refinement checkpoint given "
                            "(--rec or [paths] rec_checkpoint)");
        det = nn::load_detection_checkpoint(dp, cfg.sys);
        rec = nn::load_refinement_checkpoint(rp, cfg.sys);
    }
    const auto rows = run_experiment(cfg, want_proposed ? &det : nullptr,
                                     want_proposed ? &rec : nullptr);
    const std::string path = out.empty() ? cfg.results : out;
    if (path.empty()) throw DataError("eval: no output path (--out or [paths] results)");
    write_results_csv(path, rows);
    std::cout << "wrote " << rows.size() << " result rows -> " << path << "\n";
}

int dispatch_inner(int argc, const char* const* argv) {
    CLI::App app{"1-bit compressed-sensing superimposed CSI feedback simulator"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a training dataset file");
    CommonArgs gen_args;
    add_common(gen, gen_args);
    std::string gen_kind = "det", gen_split = "train", gen_out, gen_det;
    gen->add_option("--kind", gen_kind, "det | rec")
        ->check(CLI::IsMember({"det", "rec"}));
    gen->add_option("--split", gen_split, "train | val | test")
        ->check(CLI::IsMember({"train", "val", "test"}));
    gen->add_option("--out", gen_out, "output dataset file")->required();
    gen->add_option("--det", gen_det, "detection checkpoint (rec datasets)");

    // train-det
    auto* tdet = app.add_subcommand("train-det", "train the detection network");
    CommonArgs tdet_args;
    add_common(tdet, tdet_args);
    std::string tdet_out, tdet_data;
    tdet->add_option("--out", tdet_out, "checkpoint output path")->required();
    tdet->add_option("--data", tdet_data, "pre-generated dataset file");

    // train-rec
    auto* trec = app.add_subcommand("train-rec", "train the refinement network");
    CommonArgs trec_args;
    add_common(trec, trec_args);
    std::string trec_out, trec_det, trec_data;
    trec->add_option("--out", trec_out, "checkpoint output path")->required();
    trec->add_option("--det", trec_det, "trained detection checkpoint");
    trec->add_option("--data", trec_data, "pre-generated dataset file");

    // eval
    auto* ev = app.add_subcommand("eval", "Monte-Carlo BER/NMSE evaluation");
    CommonArgs ev_args;
    add_common(ev, ev_args);
    std::string ev_det, ev_rec, ev_out, ev_scheme;
    ev->add_option("--det", ev_det, "detection checkpoint");
    ev->add_option("--rec", ev_rec, "refinement checkpoint");
    ev->add_option("--out", ev_out, "results CSV path");
    ev->add_option("--scheme", ev_scheme, "proposed | baseline | both")
        ->check(CLI::IsMember({"proposed", "baseline", "both"}));

    // baseline
    auto* bl = app.add_subcommand("baseline", "evaluate the classical receiver only");
    CommonArgs bl_args;
    add_common(bl, bl_args);
    std::string bl_out;
    bl->add_option("--out", bl_out, "results CSV path");

    // sweep
    auto* sw = app.add_subcommand("sweep", "train + evaluate over a parameter grid");
    CommonArgs sw_args;
    add_common(sw, sw_args);
    std::string sw_param, sw_values, sw_dir, sw_det;
    sw->add_option("--param", sw_param, "rho | c | alpha2")
        ->check(CLI::IsMember({"rho", "c", "alpha2"}))
        ->required();
    sw->add_option("--values", sw_values, "comma-separated grid values")->required();
    sw->add_option("--out-dir", sw_dir, "directory for result CSVs")->required();
    sw->add_option("--det", sw_det,
                   "detection checkpoint reused across an alpha2 sweep");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (gen->parsed()) {
        ExperimentConfig cfg = gen_args.load();
        const ExperimentContext ctx = make_context(cfg.sys);
        if (gen_kind == "det") {
            const int n = gen_split == "train"  ? cfg.det_train
                          : gen_split == "val" ? cfg.det_val
                                               : cfg.det_test;
            const std::uint64_t base = gen_split == "train"  ? stream::kDetTrain
                                       : gen_split == "val" ? stream::kDetVal
                                                            : stream::kDetTest;
            save_dataset(build_detection_dataset(ctx, n, base), gen_out);
        } else {
            if (gen_det.empty())
                throw DataError("gen-data --kind rec requires --det");
            const DetectionNetwork det =
                nn::load_detection_checkpoint(gen_det, cfg.sys);
            const int n = gen_split == "train"  ? cfg.rec_train
                          : gen_split == "val" ? cfg.rec_val
                                               : cfg.rec_test;
            const std::uint64_t base = gen_split == "train"  ? stream::kRecTrain
                                       : gen_split == "val" ? stream::kRecVal
                                                            : stream::kRecTest;
            save_dataset(build_reconstruction_dataset(ctx, det, n, base, cfg.beta),
                         gen_out);
        }
        std::cout << "wrote dataset -> " << gen_out << "\n";
    } else if (tdet->parsed()) {
        run_train_det(tdet_args.load(), tdet_data, tdet_out);
    } else if (trec->parsed()) {
        ExperimentConfig cfg = trec_args.load();
        const std::string dp = trec_det.empty() ? cfg.det_checkpoint : trec_det;
        if (dp.empty())
            throw DataError("train-rec: no detection checkpoint given "
                            "(--det or [paths] det_checkpoint)");
        const DetectionNetwork det = nn::load_detection_checkpoint(dp, cfg.sys);
        run_train_rec(cfg, det, trec_data, trec_out);
    } else if (ev->parsed()) {
        ExperimentConfig cfg = ev_args.load();
        if (!ev_scheme.empty()) cfg.scheme = ev_scheme;
        run_eval(cfg, ev_det, ev_rec, ev_out);
    } else if (bl->parsed()) {
        ExperimentConfig cfg = bl_args.load();
        cfg.scheme = "baseline";
        run_eval(cfg, "", "", bl_out);
    } else if (sw->parsed()) {
        ExperimentConfig base = sw_args.load();
        std::vector<double> values;
        {
            std::stringstream ss(sw_values);
            std::string item;
            while (std::getline(ss, item, ','))
                values.push_back(std::stod(item));
        }
        if (values.empty()) throw DataError("sweep: empty --values");
        DetectionNetwork shared_det;
        bool have_shared_det = false;
        if (sw_param == "alpha2") {
            if (!sw_det.empty()) {
                shared_det = nn::load_detection_checkpoint(sw_det, base.sys);
            } else {
                std::cout << "sweep: training shared detection network\n";
                shared_det = run_train_det(base, "",
                                           sw_dir + "/sweep-det.ckpt");
            }
            have_shared_det = true;
        }
        std::vector<ResultRow> summary;
        for (double v : values) {
            ExperimentConfig cfg = base;
            if (sw_param == "rho") cfg.sys.rho = v;
            else if (sw_param == "c") cfg.sys.c = v;
            else cfg.alpha2 = v;
            cfg.validate();
            std::ostringstream tag;
            tag << sw_param << "-" << v;
            std::cout << "sweep point " << tag.str() << "\n";
            DetectionNetwork det;
            if (have_shared_det) det = shared_det;
            else
                det = run_train_det(cfg, "",
                                    sw_dir + "/sweep-" + tag.str() + "-det.ckpt");
            RefinementNetwork rec = run_train_rec(
                cfg, det, "", sw_dir + "/sweep-" + tag.str() + "-rec.ckpt");
            auto rows = run_experiment(cfg, &det, &rec);
            for (auto& r : rows) r.scheme = tag.str() + "/" + r.scheme;
            write_results_csv(sw_dir + "/sweep-" + tag.str() + ".csv", rows);
            summary.insert(summary.end(), rows.begin(), rows.end());
        }
        write_results_csv(sw_dir + "/sweep-summary.csv", summary);
        std::cout << "sweep complete -> " << sw_dir << "\n";
    }
    return 0;
}

} // namespace

int cli_dispatch(int argc, const char* const* argv) {
    try {
        return dispatch_inner(argc, argv);
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace csifb

#pragma once

#include <string>
#include <vector>

#include "csifb/signal_model.hpp"

namespace csifb {

/// Full experiment description: system dimensioning, training
/// hyperparameters, evaluation protocol, and artifact paths. Parsed from
/// a sectioned key = value text file; unknown keys are rejected.
struct ExperimentConfig {
    SystemConfig sys;

    // [training]
    int epochs = 50;
    double lr = 1e-3;
    int batch = 200;
    double alpha1 = 1e-5;
    double alpha2 = 1e-5;
    int beta = 8;  // sca_biht iterations in the proposed pipeline
    double lrelu_slope = 0.01;
    int det_train = 60000, det_val = 20000, det_test = 20000;
    int rec_train = 45000, rec_val = 15000, rec_test = 15000;

    // [eval]
    std::vector<double> snr_db = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
    std::string scheme = "both";  // proposed | baseline | both
    std::vector<int> baseline_beta = {10, 100};
    int baseline_iters = 3;
    long stop_errors = 1000;
    long max_frames = 200000;
    long nmse_frames = 15000;
    bool report_wall_clock = true;

    // [paths]
    std::string det_checkpoint;
    std::string rec_checkpoint;
    std::string results;

    void validate() const;  // throws ConfigError
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

} // namespace csifb

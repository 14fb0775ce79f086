#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csifb/harness/experiment.hpp"
#include "unit/oracles.hpp"

using namespace csifb;
using namespace csifb::test;

namespace {

struct TinyInstance {
    CsiVector h;
    MeasurementMatrix phi;
    Bits y_real, y_imag, z;
    int k_hat;
};

// Noise-free true bits and true support at N = 8, M = 16, K = 2.
TinyInstance make_instance(std::uint64_t seed) {
    SystemConfig cfg;
    cfg.N = 8;
    cfg.P = 64;
    cfg.c = 2.0;  // M = 16, L = 20
    cfg.K = 2;
    TinyInstance t;
    Rng rng = make_stream(seed, 0);
    t.phi = gen_measurement_matrix(cfg.N, cfg.M(), rng);
    t.h = gen_sparse_csi(cfg, rng);
    auto [yr, yi] = compress_1bit(t.h, t.phi);
    t.y_real = yr;
    t.y_imag = yi;
    t.z = support_bits(t.h);
    t.k_hat = estimate_sparsity(t.z);
    return t;
}

double unit_nmse(const CVec& est, const CVec& truth) {
    const CVec tn = truth / truth.norm();
    return (est - tn).squaredNorm() / tn.squaredNorm();
}

} // namespace

TEST_CASE("best_k_approx") {
    Vec x(4);
    x << 3, -5, 1, -5;
    SUBCASE("k = N is the identity") { CHECK(best_k_approx(x, 4) == x); }
    SUBCASE("k = 0 zeroes everything") {
        CHECK(best_k_approx(x, 0) == Vec(Vec::Zero(4)));
    }
    SUBCASE("magnitude order with both top-2 ties kept") {
        Vec expect(4);
        expect << 0, -5, 0, -5;
        CHECK(best_k_approx(x, 2) == expect);
    }
    SUBCASE("exact ties keep the lowest index") {
        Vec t(3);
        t << 2, -2, 2;
        Vec expect(3);
        expect << 2, -2, 0;
        CHECK(best_k_approx(t, 2) == expect);
    }
    SUBCASE("idempotent") {
        Vec once = best_k_approx(x, 2);
        CHECK(best_k_approx(once, 2) == once);
    }
    SUBCASE("k out of range rejected") {
        CHECK_THROWS_AS(best_k_approx(x, 5), std::invalid_argument);
    }
}

TEST_CASE("sca_biht basics") {
    TinyInstance t = make_instance(11);

    SUBCASE("all-zero measurements and support are flagged degenerate") {
        Bits zero_m(t.y_real.size(), 0), zero_z(8, 0);
        ScaBihtResult r = sca_biht(zero_m, zero_m, zero_z, 1, t.phi, 8);
        CHECK(r.degenerate);
        CHECK(r.h.isZero());
    }
    SUBCASE("output support is contained in the decoded support") {
        Rng rng = make_stream(12, 0);
        for (int trial = 0; trial < 30; ++trial) {
            Bits yr(16), yi(16), z(8);
            for (auto& b : yr) b = rng() % 2;
            for (auto& b : yi) b = rng() % 2;
            for (auto& b : z) b = rng() % 2;
            ScaBihtResult r = sca_biht(yr, yi, z, 3, t.phi, 5);
            for (int n = 0; n < 8; ++n)
                if (!z[n]) CHECK(r.h[n] == cplx(0, 0));
        }
    }
    SUBCASE("deterministic") {
        ScaBihtResult a = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 8);
        ScaBihtResult b = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 8);
        CHECK(a.h == b.h);
    }
    SUBCASE("unit norm unless degenerate") {
        ScaBihtResult r = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 8);
        CHECK_FALSE(r.degenerate);
        CHECK(r.h.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("sca_biht reaches the per-rail information floor (beta = 50)") {
    // The two rails are sign-measured independently, so their relative
    // scale is unobservable; the best achievable NMSE against the
    // unit-normalized truth is 1 - E[chi_K]^2 / E[chi_K^2] ~= 0.215 at
    // K = 2, plus direction error from M = 16 one-bit measurements.
    // The straight-line reference implementation lands at ~0.36 on this
    // seed family; assert that band and bit-identity with the oracle.
    int solved = 0;
    double mean_nmse = 0.0;
    const int trials = 20;
    for (std::uint64_t seed = 100; seed < 100 + trials; ++seed) {
        TinyInstance t = make_instance(seed);
        ScaBihtResult r = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 50);
        bool deg = true;
        CVec oracle = oracle_sca_biht(t.y_real, t.y_imag, t.z, t.k_hat,
                                      t.phi.values, 50, &deg);
        CHECK(r.h == oracle);
        CHECK(r.degenerate == deg);
        const double nmse = unit_nmse(r.h, t.h.values);
        mean_nmse += nmse;
        if (nmse < 0.05) ++solved;
    }
    mean_nmse /= trials;
    CHECK(mean_nmse > 0.15);  // cannot beat the rail-scale floor
    CHECK(mean_nmse < 0.55);  // but direction recovery must work
    CHECK(solved >= 1);       // lucky rail-ratio draws do solve outright
}

TEST_CASE("sca_biht bit-identical to the straight-line oracle (beta = 8)") {
    for (std::uint64_t seed = 200; seed < 230; ++seed) {
        TinyInstance t = make_instance(seed);
        ScaBihtResult r = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 8);
        bool deg = true;
        CVec oracle = oracle_sca_biht(t.y_real, t.y_imag, t.z, t.k_hat,
                                      t.phi.values, 8, &deg);
        CHECK(r.h == oracle);
    }
}

TEST_CASE("sca_biht beta trend: a plateau past beta = 8") {
    // The iterate reaches its sign-consistency cell within ~8 iterations
    // and then oscillates inside it (measured p95 jump ~0.15 on this
    // family), so doubling beta is neutral on average and bounded per
    // instance; it never degrades systematically.
    int ok = 0;
    const int trials = 200;
    double mean8 = 0.0, mean16 = 0.0;
    for (std::uint64_t seed = 300; seed < 300 + trials; ++seed) {
        TinyInstance t = make_instance(seed);
        ScaBihtResult a = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 8);
        ScaBihtResult b = sca_biht(t.y_real, t.y_imag, t.z, t.k_hat, t.phi, 16);
        const double na = unit_nmse(a.h, t.h.values);
        const double nb = unit_nmse(b.h, t.h.values);
        mean8 += na;
        mean16 += nb;
        if (nb <= na + 0.20) ++ok;
    }
    CHECK(ok >= 188);  // 94% within the measured oscillation band
    CHECK(std::abs(mean16 - mean8) / trials <= 0.03);
}

TEST_CASE("refine") {
    SystemConfig cfg;
    cfg.N = 8;
    cfg.P = 64;
    cfg.c = 2.0;
    cfg.K = 2;
    Rng rng = make_stream(13, 0);

    SUBCASE("dims follow the 2N/4N/2N table") {
        RefinementNetwork net = init_refinement_network(cfg, rng);
        CHECK(net.net.in() == 16);
        CHECK(net.net.hidden() == 32);
        CHECK(net.net.out() == 16);
        CHECK(net.net.out_act == nn::OutAct::Linear);
    }
    SUBCASE("zero weights broadcast the output bias") {
        RefinementNetwork net = init_refinement_network(cfg, rng);
        net.net.W1.setZero();
        net.net.W2.setZero();
        std::normal_distribution<double> n(0, 1);
        for (int i = 0; i < 16; ++i) net.net.b2[i] = n(rng);
        Mat X(16, 3);
        for (int j = 0; j < 3; ++j)
            for (int i = 0; i < 16; ++i) X(i, j) = n(rng);
        Mat y = refine(net, X);
        for (int j = 0; j < 3; ++j) CHECK(Vec(y.col(j)) == net.net.b2);
    }
    SUBCASE("identity construction reproduces the input") {
        RefinementNetwork net = init_refinement_network(cfg, rng);
        net.net.lrelu_slope = 1.0;
        net.net.W1.setZero();
        net.net.W2.setZero();
        for (int i = 0; i < 16; ++i) {
            net.net.W1(i, i) = 1.0;
            net.net.W2(i, i) = 1.0;
            net.net.bn_gamma[i] = std::sqrt(1.0 + nn::kBnEps);
        }
        std::normal_distribution<double> n(0, 1);
        Mat X(16, 4);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 16; ++i) X(i, j) = n(rng);
        Mat y = refine(net, X);
        CHECK((y - X).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("random net matches the scalar recomputation") {
        RefinementNetwork net = init_refinement_network(cfg, rng);
        std::normal_distribution<double> n(0, 1);
        Mat X(16, 5);
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 16; ++i) X(i, j) = n(rng);
        Mat y = refine(net, X);
        Mat o = oracle_subnet_forward_infer(net.net, X);
        CHECK((y - o).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("uninitialized network is flagged") {
        RefinementNetwork empty;
        CHECK_THROWS_AS(refine(empty, Mat::Zero(16, 1)), std::logic_error);
    }
}

TEST_CASE("reconstruction loss") {
    SystemConfig cfg;
    cfg.N = 4;
    cfg.P = 16;
    cfg.c = 0.5;
    cfg.K = 2;
    Rng rng = make_stream(14, 0);
    RefinementNetwork net = init_refinement_network(cfg, rng);
    std::normal_distribution<double> n(0, 1);
    Mat h(8, 3);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 8; ++i) h(i, j) = n(rng);

    SUBCASE("perfect estimate, no regularization") {
        CHECK(reconstruction_loss(h, h, net, 0.0) == 0.0);
    }
    SUBCASE("alpha2 adds exactly alpha2 * ||Theta2||^2") {
        const double theta = net.net.W1.squaredNorm() + net.net.b1.squaredNorm() +
                             net.net.W2.squaredNorm() + net.net.b2.squaredNorm();
        const double base = reconstruction_loss(h, h, net, 0.0);
        CHECK(reconstruction_loss(h, h, net, 1e-5) ==
              doctest::Approx(base + 1e-5 * theta).epsilon(1e-12));
    }
    SUBCASE("gradient matches finite differences") {
        Mat X(8, 4), H(8, 4);
        for (int j = 0; j < 4; ++j)
            for (int i = 0; i < 8; ++i) {
                X(i, j) = n(rng);
                H(i, j) = n(rng);
            }
        const double alpha2 = 1e-3;
        auto loss = [&]() {
            nn::SubnetParams pc = net.net;
            nn::ForwardCache cache;
            Mat y = nn::subnet_forward_train(pc, X, cache);
            double theta = pc.W1.squaredNorm() + pc.b1.squaredNorm() +
                           pc.W2.squaredNorm() + pc.b2.squaredNorm();
            return (y - H).squaredNorm() / 4.0 + alpha2 * theta;
        };
        nn::SubnetParams pc = net.net;
        nn::ForwardCache cache;
        Mat y = nn::subnet_forward_train(pc, X, cache);
        nn::SubnetGrads g = nn::zero_grads(net.net);
        nn::subnet_backward(net.net, cache, Mat((2.0 / 4.0) * (y - H)), g);
        auto l2p = nn::l2_tensors(net.net);
        auto l2g = nn::l2_tensors(g);
        nn::l2_penalty(l2p, alpha2, l2g);

        double worst = 0.0;
        auto ps = nn::trainable_tensors(net.net);
        auto gs = nn::trainable_tensors(g);
        for (std::size_t t = 0; t < ps.size(); ++t)
            for (Eigen::Index i = 0; i < ps[t].size; ++i) {
                const double fd = fd_central(loss, ps[t].data + i);
                worst = std::max(worst, rel_err(gs[t].data[i], fd));
            }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("refiner training") {
    SystemConfig cfg;
    cfg.N = 4;
    cfg.P = 16;
    cfg.c = 0.5;
    cfg.K = 2;
    cfg.seed = 5;

    // Synthetic task: recover 2x + 1 from x.
    Rng rng = make_stream(15, 0);
    std::normal_distribution<double> n(0, 1);
    ReconstructionDataset train, val;
    train.x.resize(8, 256);
    train.h.resize(8, 256);
    for (int j = 0; j < 256; ++j)
        for (int i = 0; i < 8; ++i) {
            train.x(i, j) = n(rng);
            train.h(i, j) = 2.0 * train.x(i, j) + 1.0;
        }
    val.x = train.x.leftCols(64);
    val.h = train.h.leftCols(64);

    RefinerTrainOptions opt;
    opt.epochs = 100;
    opt.lr = 0.01;
    opt.batch = 64;
    opt.alpha2 = 0.0;

    SUBCASE("lr = 0 leaves parameters at initialization") {
        RefinerTrainOptions o2 = opt;
        o2.lr = 0.0;
        o2.epochs = 1;
        Rng a = make_stream(cfg.seed, stream::kRecInit);
        RefinementNetwork net = train_refiner(train, val, cfg, o2, a, nullptr);
        Rng b = make_stream(cfg.seed, stream::kRecInit);
        RefinementNetwork init = init_refinement_network(cfg, b);
        CHECK(net.net.W1 == init.net.W1);
        CHECK(net.net.b2 == init.net.b2);
    }
    SUBCASE("learns an affine map") {
        Rng a = make_stream(cfg.seed, stream::kRecInit);
        RefinerTrainLog log;
        RefinementNetwork net = train_refiner(train, val, cfg, opt, a, &log);
        CHECK(log.val_loss.back() < 0.1 * log.val_loss.front());
        Mat y = refine(net, val.x);
        const double mse = (y - val.h).squaredNorm() / 64.0;
        CHECK(mse < 0.05 * val.h.squaredNorm() / 64.0);
    }
}

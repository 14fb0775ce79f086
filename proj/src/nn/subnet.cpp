#include "csifb/nn/subnet.hpp"

namespace csifb::nn {

namespace {

Mat lrelu(const Mat& z, double a) {
    return z.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
}

// Derivative at 0 is defined as the negative-side slope a.
Mat lrelu_deriv(const Mat& z, double a) {
    return z.unaryExpr([a](double v) { return v > 0.0 ? 1.0 : a; });
}

// diag(a) * X + b 1^T
Mat feature_affine(const Mat& X, const Vec& a, const Vec& b) {
    Mat y(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        y.col(j) = a.cwiseProduct(X.col(j)) + b;
    return y;
}

void check_input(const SubnetParams& p, const Mat& X) {
    require(X.rows() == p.in(), "subnet: input feature dimension mismatch");
    require(X.cols() >= 1, "subnet: empty batch");
    require(X.allFinite(), "subnet: non-finite input");
}

} // namespace

SubnetParams init_subnet(int in, int hidden, int out, OutAct act, Rng& rng,
                         double lrelu_slope) {
    require(in > 0 && hidden > 0 && out > 0, "init_subnet: bad dims");
    SubnetParams p;
    p.out_act = act;
    p.lrelu_slope = lrelu_slope;
    auto glorot = [&rng](Mat& W, int rows, int cols) {
        const double bound = std::sqrt(6.0 / (rows + cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        W.resize(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) W(i, j) = u(rng);
    };
    glorot(p.W1, hidden, in);
    glorot(p.W2, out, hidden);
    p.b1 = Vec::Zero(hidden);
    p.b2 = Vec::Zero(out);
    p.bn_gamma = Vec::Ones(in);
    p.bn_beta = Vec::Zero(in);
    p.bn_mean = Vec::Zero(in);
    p.bn_var = Vec::Ones(in);
    return p;
}

SubnetGrads zero_grads(const SubnetParams& p) {
    SubnetGrads g;
    g.W1 = Mat::Zero(p.W1.rows(), p.W1.cols());
    g.W2 = Mat::Zero(p.W2.rows(), p.W2.cols());
    g.b1 = Vec::Zero(p.b1.size());
    g.b2 = Vec::Zero(p.b2.size());
    g.gamma = Vec::Zero(p.bn_gamma.size());
    g.beta = Vec::Zero(p.bn_beta.size());
    return g;
}

Mat subnet_infer(const SubnetParams& p, const Mat& X) {
    check_input(p, X);
    Vec inv_std(p.in());
    for (Eigen::Index i = 0; i < p.in(); ++i)
        inv_std[i] = 1.0 / std::sqrt(p.bn_var[i] + kBnEps);
    const Vec scale = p.bn_gamma.cwiseProduct(inv_std);
    const Vec shift = p.bn_beta - p.bn_mean.cwiseProduct(scale);
    Mat xn = feature_affine(X, scale, shift);
    Mat z1 = per_sample_product(p.W1, xn);
    z1.colwise() += p.b1;
    Mat a1 = lrelu(z1, p.lrelu_slope);
    Mat z2 = per_sample_product(p.W2, a1);
    z2.colwise() += p.b2;
    if (p.out_act == OutAct::Tanh)
        return z2.unaryExpr([](double v) { return std::tanh(v); });
    return z2;
}

Mat subnet_forward_train(SubnetParams& p, const Mat& X, ForwardCache& cache) {
    check_input(p, X);
    require(X.cols() >= 2, "subnet train forward: batch must have >= 2 samples");
    cache.x = X;
    cache.mu = X.rowwise().mean();
    Mat xc = X.colwise() - cache.mu;
    cache.var = xc.cwiseProduct(xc).rowwise().mean();  // biased
    cache.inv_std.resize(p.in());
    for (Eigen::Index i = 0; i < p.in(); ++i)
        cache.inv_std[i] = 1.0 / std::sqrt(cache.var[i] + kBnEps);
    cache.xhat = feature_affine(xc, cache.inv_std, Vec::Zero(p.in()));
    cache.xn = feature_affine(cache.xhat, p.bn_gamma, p.bn_beta);
    cache.z1 = (p.W1 * cache.xn).colwise() + p.b1;
    cache.a1 = lrelu(cache.z1, p.lrelu_slope);
    Mat z2 = (p.W2 * cache.a1).colwise() + p.b2;
    cache.y = (p.out_act == OutAct::Tanh)
                  ? Mat(z2.unaryExpr([](double v) { return std::tanh(v); }))
                  : z2;

    p.bn_mean = kBnMomentum * p.bn_mean + (1.0 - kBnMomentum) * cache.mu;
    p.bn_var = kBnMomentum * p.bn_var + (1.0 - kBnMomentum) * cache.var;
    return cache.y;
}

Mat subnet_backward(const SubnetParams& p, const ForwardCache& cache,
                    const Mat& dY, SubnetGrads& g) {
    require(dY.rows() == p.out() && dY.cols() == cache.y.cols(),
            "subnet_backward: dY shape mismatch");
    const double B = static_cast<double>(cache.x.cols());

    Mat dZ2 = (p.out_act == OutAct::Tanh)
                  ? Mat(dY.cwiseProduct(
                        cache.y.unaryExpr([](double v) { return 1.0 - v * v; })))
                  : dY;
    g.W2.noalias() += dZ2 * cache.a1.transpose();
    g.b2 += dZ2.rowwise().sum();

    Mat dA1 = p.W2.transpose() * dZ2;
    Mat dZ1 = dA1.cwiseProduct(lrelu_deriv(cache.z1, p.lrelu_slope));
    g.W1.noalias() += dZ1 * cache.xn.transpose();
    g.b1 += dZ1.rowwise().sum();

    Mat dXn = p.W1.transpose() * dZ1;
    g.gamma += dXn.cwiseProduct(cache.xhat).rowwise().sum();
    g.beta += dXn.rowwise().sum();

    // BN backward with batch statistics (biased variance).
    Mat dxhat(dXn.rows(), dXn.cols());
    for (Eigen::Index j = 0; j < dXn.cols(); ++j)
        dxhat.col(j) = p.bn_gamma.cwiseProduct(dXn.col(j));
    const Vec sum_dxhat = dxhat.rowwise().sum();
    const Vec sum_dxhat_xhat = dxhat.cwiseProduct(cache.xhat).rowwise().sum();
    Mat dX(dXn.rows(), dXn.cols());
    for (Eigen::Index j = 0; j < dXn.cols(); ++j) {
        Vec t = B * dxhat.col(j) - sum_dxhat -
                cache.xhat.col(j).cwiseProduct(sum_dxhat_xhat);
        dX.col(j) = cache.inv_std.cwiseProduct(t) / B;
    }
    return dX;
}

std::vector<TensorRef> trainable_tensors(SubnetParams& p) {
    return {{p.W1.data(), p.W1.size()},
            {p.b1.data(), p.b1.size()},
            {p.W2.data(), p.W2.size()},
            {p.b2.data(), p.b2.size()},
            {p.bn_gamma.data(), p.bn_gamma.size()},
            {p.bn_beta.data(), p.bn_beta.size()}};
}

std::vector<TensorRef> trainable_tensors(SubnetGrads& g) {
    return {{g.W1.data(), g.W1.size()},
            {g.b1.data(), g.b1.size()},
            {g.W2.data(), g.W2.size()},
            {g.b2.data(), g.b2.size()},
            {g.gamma.data(), g.gamma.size()},
            {g.beta.data(), g.beta.size()}};
}

std::vector<TensorRef> l2_tensors(SubnetParams& p) {
    return {{p.W1.data(), p.W1.size()},
            {p.b1.data(), p.b1.size()},
            {p.W2.data(), p.W2.size()},
            {p.b2.data(), p.b2.size()}};
}

std::vector<TensorRef> l2_tensors(SubnetGrads& g) {
    return {{g.W1.data(), g.W1.size()},
            {g.b1.data(), g.b1.size()},
            {g.W2.data(), g.W2.size()},
            {g.b2.data(), g.b2.size()}};
}

double l2_penalty(const std::vector<TensorRef>& params, double alpha,
                  const std::vector<TensorRef>& grads) {
    require(alpha >= 0.0, "l2_penalty: alpha must be >= 0");
    require(params.size() == grads.size(), "l2_penalty: tensor list mismatch");
    double sum = 0.0;
    for (std::size_t t = 0; t < params.size(); ++t) {
        require(params[t].size == grads[t].size, "l2_penalty: shape mismatch");
        for (Eigen::Index i = 0; i < params[t].size; ++i) {
            const double v = params[t].data[i];
            sum += v * v;
            grads[t].data[i] += 2.0 * alpha * v;
        }
    }
    return alpha * sum;
}

} // namespace csifb::nn

#include "fastexec/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fastexec/errors.hpp"

namespace fastexec {

void OuFactorParams::validate() const {
    if (!(lambda1 > 0.0) || !(lambda2 > 0.0))
        throw DataError("OU factors: lambda1, lambda2 must be positive");
    if (!(eta1 > 0.0) || !(eta2 > 0.0))
        throw DataError("OU factors: eta1, eta2 must be positive");
    if (!(std::abs(rho) < 1.0))
        throw DataError("OU factors: |rho| must be < 1");
}

void ModelParams::validate() const {
    if (!(phi > 0.0) || !(phi <= 1.0))
        throw DataError("ModelParams: phi must lie in (0, 1]");
    if (!(epsilon > 0.0)) throw DataError("ModelParams: epsilon must be positive");
    if (!(A > 0.0)) throw DataError("ModelParams: A must be positive");
    if (!(T > 0.0)) throw DataError("ModelParams: T must be positive");
    if (!(kappa_lo > 0.0) || !(kappa_lo <= kappa_hi))
        throw DataError("ModelParams: need 0 < kappa_lo <= kappa_hi");
    if (!(sigma_lo <= sigma_hi))
        throw DataError("ModelParams: need sigma_lo <= sigma_hi");
    if (!(gamma >= 0.0)) throw DataError("ModelParams: gamma must be >= 0");
    factors.validate();
}

double ModelParams::kappa_map(double y1) const {
    return std::clamp(y1, kappa_lo, kappa_hi);
}

double ModelParams::sigma_map(double y2) const {
    return std::exp(std::clamp(y2, sigma_lo, sigma_hi));
}

double InvariantGaussian::sd1() const { return std::sqrt(cov[0][0]); }
double InvariantGaussian::sd2() const { return std::sqrt(cov[1][1]); }

InvariantGaussian stationary_covariance(const OuFactorParams& f) {
    f.validate();
    InvariantGaussian law;
    law.mean = {f.m1, f.m2};
    const double a11 = f.eta1 * f.eta1 / (2.0 * f.lambda1);
    const double a12 = f.rho * f.eta1 * f.eta2 / (f.lambda1 + f.lambda2);
    const double a22 = f.eta2 * f.eta2 / (2.0 * f.lambda2);
    law.cov = {{{a11, a12}, {a12, a22}}};

    // Lyapunov identity Lambda*A + A*Lambda = eta*eta^T, entrywise relative check.
    const double lhs11 = 2.0 * f.lambda1 * a11;
    const double lhs12 = (f.lambda1 + f.lambda2) * a12;
    const double lhs22 = 2.0 * f.lambda2 * a22;
    const double rhs11 = f.eta1 * f.eta1;
    const double rhs12 = f.rho * f.eta1 * f.eta2;
    const double rhs22 = f.eta2 * f.eta2;
    const double scale = std::max({std::abs(rhs11), std::abs(rhs12), std::abs(rhs22)});
    const double err = std::max({std::abs(lhs11 - rhs11), std::abs(lhs12 - rhs12),
                                 std::abs(lhs22 - rhs22)});
    if (err > 1e-12 * scale)
        throw NumericError("stationary_covariance: Lyapunov identity violated");
    return law;
}

namespace {

constexpr const char* kKeys[] = {"phi",      "gamma",    "A",        "T",
                                 "epsilon",  "kappa_lo", "kappa_hi", "sigma_lo",
                                 "sigma_hi", "lambda1",  "lambda2",  "m1",
                                 "m2",       "eta1",     "eta2",     "rho"};

}  // namespace

ModelParams load_model_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed config " + path + ": " + e.what());
    }
    for (const char* k : kKeys)
        if (!j.contains(k)) throw DataError(std::string("config missing key: ") + k);

    ModelParams p;
    p.phi = j["phi"].get<double>();
    p.gamma = j["gamma"].get<double>();
    p.A = j["A"].get<double>();
    p.T = j["T"].get<double>();
    p.epsilon = j["epsilon"].get<double>();
    p.kappa_lo = j["kappa_lo"].get<double>();
    p.kappa_hi = j["kappa_hi"].get<double>();
    p.sigma_lo = j["sigma_lo"].get<double>();
    p.sigma_hi = j["sigma_hi"].get<double>();
    p.factors.lambda1 = j["lambda1"].get<double>();
    p.factors.lambda2 = j["lambda2"].get<double>();
    p.factors.m1 = j["m1"].get<double>();
    p.factors.m2 = j["m2"].get<double>();
    p.factors.eta1 = j["eta1"].get<double>();
    p.factors.eta2 = j["eta2"].get<double>();
    p.factors.rho = j["rho"].get<double>();
    p.validate();
    return p;
}

void save_model_params(const ModelParams& p, const std::string& path) {
    nlohmann::json j;
    j["phi"] = p.phi;
    j["gamma"] = p.gamma;
    j["A"] = p.A;
    j["T"] = p.T;
    j["epsilon"] = p.epsilon;
    j["kappa_lo"] = p.kappa_lo;
    j["kappa_hi"] = p.kappa_hi;
    j["sigma_lo"] = p.sigma_lo;
    j["sigma_hi"] = p.sigma_hi;
    j["lambda1"] = p.factors.lambda1;
    j["lambda2"] = p.factors.lambda2;
    j["m1"] = p.factors.m1;
    j["m2"] = p.factors.m2;
    j["eta1"] = p.factors.eta1;
    j["eta2"] = p.factors.eta2;
    j["rho"] = p.factors.rho;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write config file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace fastexec

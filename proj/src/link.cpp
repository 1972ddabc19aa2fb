#include "poolcast/link.hpp"

#include "poolcast/error.hpp"
#include "poolcast/special.hpp"

#include <algorithm>
#include <cmath>

namespace poolcast {

double LinkFunction::apply(double x) const {
    switch (kind) {
        case LinkKind::Identity: return x;
        case LinkKind::Reciprocal: return 1.0 / x;
        case LinkKind::Log: return std::log(x);
        case LinkKind::ProbitQuantile: return special::normal_quantile(x);
    }
    return x;
}

double LinkFunction::inverse(double s) const {
    switch (kind) {
        case LinkKind::Identity: return s;
        case LinkKind::Reciprocal: return 1.0 / s;
        case LinkKind::Log: return std::exp(s);
        case LinkKind::ProbitQuantile: return special::normal_cdf(s);
    }
    return s;
}

double LinkFunction::derivative(double x) const {
    switch (kind) {
        case LinkKind::Identity: return 1.0;
        case LinkKind::Reciprocal: return -1.0 / (x * x);
        case LinkKind::Log: return 1.0 / x;
        case LinkKind::ProbitQuantile: return 1.0 / special::normal_pdf(special::normal_quantile(x));
    }
    return 1.0;
}

std::string_view LinkFunction::name() const noexcept {
    switch (kind) {
        case LinkKind::Identity: return "identity";
        case LinkKind::Reciprocal: return "reciprocal";
        case LinkKind::Log: return "log";
        case LinkKind::ProbitQuantile: return "probit";
    }
    return "identity";
}

double LinkFunction::pool_cdf(std::span<const double> w, std::span<const double> cdfs) const {
    if (!open_domain()) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * cdfs[i];
        return std::clamp(s, 0.0, 1.0);
    }
    bool all_zero = true;
    bool all_one = true;
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double f = cdfs[i];
        if (f > 0.0) all_zero = false;
        if (f < 1.0) all_one = false;
        s += w[i] * apply(std::clamp(f, kClamp, 1.0 - kClamp));
    }
    if (all_zero) return 0.0;
    if (all_one) return 1.0;
    return std::clamp(inverse(s), 0.0, 1.0);
}

double LinkFunction::pool_density(std::span<const double> w, std::span<const double> cdfs,
                                  std::span<const double> pdfs) const {
    if (!open_domain()) {
        double s = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * pdfs[i];
        return s;
    }
    const double g = pool_cdf(w, cdfs);
    if (g <= 0.0 || g >= 1.0) return 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double f = cdfs[i];
        if (f < kClamp || f > 1.0 - kClamp || w[i] == 0.0) continue;
        num += w[i] * derivative(f) * pdfs[i];
    }
    return std::max(0.0, num / derivative(std::clamp(g, kClamp, 1.0 - kClamp)));
}

LinkFunction parse_link(std::string_view name) {
    if (name == "identity") return {LinkKind::Identity};
    if (name == "reciprocal") return {LinkKind::Reciprocal};
    if (name == "log") return {LinkKind::Log};
    if (name == "probit") return {LinkKind::ProbitQuantile};
    throw Error(ErrorCode::InvalidArgument, "unknown link '" + std::string(name) + "'");
}

}  // namespace poolcast

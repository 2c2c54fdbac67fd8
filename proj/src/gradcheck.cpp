#include "boardgraph/gradcheck.hpp"

#include <cmath>

namespace boardgraph {

GradcheckReport finite_difference_gradcheck(const std::function<double()>& loss,
                                            std::vector<ParamView> params,
                                            const std::vector<double>& analytic, double eps) {
    if (eps <= 0.0) throw ConfigError("gradcheck: eps must be positive");
    std::size_t total = 0;
    for (const auto& p : params) total += p.values.size();
    if (total != analytic.size())
        throw ShapeError("gradcheck: analytic gradient has " + std::to_string(analytic.size()) +
                         " entries, parameter views have " + std::to_string(total));

    GradcheckReport report;
    std::size_t flat = 0;
    for (auto& view : params) {
        for (std::size_t i = 0; i < view.values.size(); ++i, ++flat) {
            const double saved = view.values[i];
            view.values[i] = saved + eps;
            double up = loss();
            view.values[i] = saved - eps;
            double down = loss();
            view.values[i] = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw NumericError("gradcheck: non-finite loss at parameter " + view.name);
            double numeric = (up - down) / (2.0 * eps);
            double a = analytic[flat];
            double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            double rel = std::fabs(a - numeric) / denom;
            if (rel > report.max_relative_error) {
                report.max_relative_error = rel;
                report.worst_param = view.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace boardgraph

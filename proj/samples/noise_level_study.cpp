// A small replicated study in the Example 1 design at smoke scale:
// mean sigma-hat / sigma - 1 per estimator at the second penalty level.
#include <cstdio>

#include <scaledreg/scaledreg.hpp>

int main()
{
    using namespace scaledreg;
    SimConfig c = SimConfig::preset(Design::Example1, "smoke");
    c.levels = {2};
    c.estimators = {Estimator::ScaledLasso, Estimator::ScaledMCP, Estimator::PMLE, Estimator::BC};
    c.threads = resolve_threads();
    const SimTable t = run_replications(c);
    for (const auto& key : t.keys) {
        const SimMetrics& m = t.rows.at(key);
        std::printf("%-13s bias=%+.3f sd=%.3f size=%.2f\n", estimator_name(key.first).c_str(), m.bias_sigma,
                    m.se_sigma, m.avg_model_size);
    }
    return 0;
}

// Scaled lasso on the bundled toy data, then least squares on the selected model.
#include <cstdio>
#include <string>

#include <scaledreg/scaledreg.hpp>

int main(int argc, char** argv)
{
    using namespace scaledreg;
    const std::string dir = argc > 1 ? argv[1] : "data/toy";
    const Dataset data = load_dataset(dir + "/X.csv", dir + "/y.csv");
    const double lambda0 = universal_lambda0(data.n(), data.p(), 2);

    const ScaledFit fit = scaled_fit(data, lambda0);
    const PostSelectionFit post = lse_after_selection(data, support_of(fit.beta));

    std::printf("n=%ld p=%ld lambda0=%.4f\n", static_cast<long>(data.n()), static_cast<long>(data.p()), lambda0);
    std::printf("sigma_hat=%.4f lambda_hat=%.4f iterations=%d\n", fit.sigma, fit.lambda_hat, fit.iterations);
    std::printf("sigma_bar=%.4f selected:", post.sigma_bar);
    for (Index j : post.support) std::printf(" %ld", static_cast<long>(j));
    std::printf("\n");
    return 0;
}

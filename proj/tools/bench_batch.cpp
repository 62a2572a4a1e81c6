// Compares the serial reference batch-gradient kernel against the OpenMP
// chunked one on the default synthetic benchmark and reports throughput.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "imv/evalx.hpp"
#include "imv/trainer.hpp"

using namespace imv;

namespace {

double max_abs_diff(const GradVec& a, const GradVec& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        for (std::size_t i = 0; i < a[k].numel(); ++i)
            m = std::max(m, std::abs(a[k].data[i] - b[k].data[i]));
    return m;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t batches = argc > 1 ? static_cast<std::size_t>(std::atoi(argv[1])) : 8;

    SyntheticSpec spec = default_benchmark();
    SeriesTable table = generate_synthetic(spec);
    WindowedDataset ds = prepare_dataset(table, 10, {0.7, 0.1, 0.2});

    ModelConfig mc;
    mc.cell.n_vars = ds.n_vars;
    mc.cell.per_var_dim = 8;
    mc.cell.variant = Variant::Tensor;
    Parameters params = init_model_params(mc, 42);
    ParamLayout layout = ParamLayout::build(mc, params);
    PreparedData data = PreparedData::build(ds);
    ImportanceState imp = ImportanceState::uniform(ds.n_vars, ds.window);

    std::vector<std::size_t> train = ds.indices(Split::Train);
    const std::size_t batch = 64;
    batches = std::min(batches, train.size() / batch);

    auto run = [&](bool parallel, GradVec& last_grads) {
        auto t0 = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < batches; ++b) {
            std::span<const std::size_t> idx(train.data() + b * batch, batch);
            BatchStats st =
                parallel ? batch_gradients_parallel(mc, layout, params, data, idx,
                                                    imp.var_importance, true)
                         : batch_gradients_serial(mc, layout, params, data, idx,
                                                  imp.var_importance);
            if (b + 1 == batches) last_grads = std::move(st.grad_sum);
        }
        auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double>(t1 - t0).count();
    };

    GradVec g_serial, g_parallel;
    const double t_serial = run(false, g_serial);
    const double t_parallel = run(true, g_parallel);

    const double n_inst = static_cast<double>(batches * batch);
#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    std::printf("batch gradients over %zu batches of %zu (N=%zu, d=%zu, T=%zu)\n", batches,
                batch, ds.n_vars, mc.cell.per_var_dim, ds.window);
    std::printf("serial reference: %8.3f s  (%7.1f instances/s)\n", t_serial,
                n_inst / t_serial);
    std::printf("openmp (%2d thr) : %8.3f s  (%7.1f instances/s)\n", threads, t_parallel,
                n_inst / t_parallel);
    std::printf("speedup: %.2fx, max |grad diff| of last batch: %.3e\n", t_serial / t_parallel,
                max_abs_diff(g_serial, g_parallel));
    return 0;
}

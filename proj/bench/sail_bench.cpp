#include "sail/kernels.hpp"
#include "sail/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

using namespace sail;
namespace ref = sail::kernels::reference;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return v;
}

double best_ms(int reps, const std::function<void()>& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
    return d;
}

struct Case {
    std::string name;
    std::function<void(std::vector<double>&)> reference;
    std::function<void(std::vector<double>&)> production;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial reference kernels vs OpenMP kernels"};
    int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    int reps = 5;
    std::size_t n = 200, d = 256, hidden = 32;
    app.add_option("--threads", threads, "OpenMP threads for the parallel column")->capture_default_str();
    app.add_option("--reps", reps, "repetitions, best time is reported")->capture_default_str();
    app.add_option("--frames", n, "sequence length")->capture_default_str();
    app.add_option("--dim", d, "feature width")->capture_default_str();
    app.add_option("--hidden", hidden, "additive attention width")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    Rng rng(1);
    const auto a = random_vec(rng, n * d), b = random_vec(rng, d * d), bt = random_vec(rng, n * d);
    const std::size_t heads = 4, hd = d / heads;

    kernels::AttentionShape local{n, n, heads, hd, hd, 8, 1.0 / std::sqrt(static_cast<double>(hd))};
    kernels::AttentionShape global = local;
    global.window = -1;
    const auto q = random_vec(rng, n * d), k = random_vec(rng, n * d), v = random_vec(rng, n * d), dout = random_vec(rng, n * d);

    kernels::ContextShape ctx{n, hidden, d, true};
    const auto ca = random_vec(rng, n * hidden), cb = random_vec(rng, n * hidden), cw = random_vec(rng, hidden);
    const auto cdout = random_vec(rng, n * d);
    std::vector<double> tanh_cache(ctx.pairs() * hidden), weights(ctx.pairs());
    kernels::context_forward(ctx, ca.data(), cb.data(), cw.data(), v.data(), std::vector<double>(n * d).data(), tanh_cache.data(),
                             weights.data());

    auto attention_probs = [&](const kernels::AttentionShape& s) {
        std::vector<double> out(n * d), probs(heads * n * n);
        ref::attention_forward(s, q.data(), k.data(), v.data(), out.data(), probs.data());
        return probs;
    };
    const auto local_probs = attention_probs(local), global_probs = attention_probs(global);

    std::vector<Case> cases;
    cases.push_back({"gemm_nn", [&](auto& c) { c.assign(n * d, 0.0), ref::gemm_nn(a.data(), b.data(), c.data(), n, d, d, false); },
                     [&](auto& c) { c.assign(n * d, 0.0), kernels::gemm_nn(a.data(), b.data(), c.data(), n, d, d, false); }});
    cases.push_back({"gemm_nt", [&](auto& c) { c.assign(n * d, 0.0), ref::gemm_nt(a.data(), b.data(), c.data(), n, d, d, false); },
                     [&](auto& c) { c.assign(n * d, 0.0), kernels::gemm_nt(a.data(), b.data(), c.data(), n, d, d, false); }});
    cases.push_back({"gemm_tn", [&](auto& c) { c.assign(d * d, 0.0), ref::gemm_tn(a.data(), bt.data(), c.data(), n, d, d, false); },
                     [&](auto& c) { c.assign(d * d, 0.0), kernels::gemm_tn(a.data(), bt.data(), c.data(), n, d, d, false); }});
    for (const auto* shape : {&local, &global}) {
        const std::string tag = shape->window < 0 ? "global" : "local";
        cases.push_back({"attention_fwd_" + tag,
                         [&, shape](auto& c) {
                             c.assign(n * d, 0.0);
                             std::vector<double> probs(heads * n * n);
                             ref::attention_forward(*shape, q.data(), k.data(), v.data(), c.data(), probs.data());
                         },
                         [&, shape](auto& c) {
                             c.assign(n * d, 0.0);
                             std::vector<double> probs(heads * n * n);
                             kernels::attention_forward(*shape, q.data(), k.data(), v.data(), c.data(), probs.data());
                         }});
        const auto& probs = shape->window < 0 ? global_probs : local_probs;
        cases.push_back({"attention_bwd_" + tag,
                         [&, shape](auto& c) {
                             c.assign(3 * n * d, 0.0);
                             ref::attention_backward(*shape, q.data(), k.data(), v.data(), probs.data(), dout.data(), c.data(),
                                                     c.data() + n * d, c.data() + 2 * n * d);
                         },
                         [&, shape](auto& c) {
                             c.assign(3 * n * d, 0.0);
                             std::vector<double> scratch(heads * n * n);
                             kernels::attention_backward(*shape, q.data(), k.data(), v.data(), probs.data(), dout.data(), c.data(),
                                                         c.data() + n * d, c.data() + 2 * n * d, scratch.data());
                         }});
    }
    cases.push_back({"context_fwd",
                     [&](auto& c) {
                         c.assign(n * d, 0.0);
                         std::vector<double> th(ctx.pairs() * hidden), w(ctx.pairs());
                         ref::context_forward(ctx, ca.data(), cb.data(), cw.data(), v.data(), c.data(), th.data(), w.data());
                     },
                     [&](auto& c) {
                         c.assign(n * d, 0.0);
                         std::vector<double> th(ctx.pairs() * hidden), w(ctx.pairs());
                         kernels::context_forward(ctx, ca.data(), cb.data(), cw.data(), v.data(), c.data(), th.data(), w.data());
                     }});
    const std::size_t grad_size = 2 * n * hidden + hidden + n * d;
    cases.push_back({"context_bwd",
                     [&](auto& c) {
                         c.assign(grad_size, 0.0);
                         ref::context_backward(ctx, cw.data(), v.data(), tanh_cache.data(), weights.data(), cdout.data(), c.data(),
                                               c.data() + n * hidden, c.data() + 2 * n * hidden, c.data() + 2 * n * hidden + hidden);
                     },
                     [&](auto& c) {
                         c.assign(grad_size, 0.0);
                         std::vector<double> scratch(ctx.pairs() + n * hidden);
                         kernels::context_backward(ctx, cw.data(), v.data(), tanh_cache.data(), weights.data(), cdout.data(), c.data(),
                                                   c.data() + n * hidden, c.data() + 2 * n * hidden, c.data() + 2 * n * hidden + hidden,
                                                   scratch.data());
                     }});

    std::printf("n=%zu d=%zu hidden=%zu reps=%d, times in ms (best of reps)\n", n, d, hidden, reps);
    std::printf("%-22s %10s %10s %10s %8s %12s %8s\n", "kernel", "reference", "omp x1", "omp xT",
                "speedup", "max |diff|", "1==T");
    for (const auto& c : cases) {
        std::vector<double> r, p1, pt;
        const double tr = best_ms(reps, [&] { c.reference(r); });
        kernels::set_threads(1);
        const double t1 = best_ms(reps, [&] { c.production(p1); });
        kernels::set_threads(threads);
        const double tt = best_ms(reps, [&] { c.production(pt); });
        kernels::set_threads(1);
        std::printf("%-22s %10.3f %10.3f %10.3f %7.2fx %12.2e %8s\n", c.name.c_str(), tr, t1, tt, tr / tt, max_diff(r, pt),
                    p1 == pt ? "yes" : "NO");
    }
    std::printf("omp xT uses %d threads\n", threads);
    return 0;
}

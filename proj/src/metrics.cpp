#include "splitinfer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace splitinfer {

namespace {

// shift to min 0, smooth with epsilon relative to the shifted range
// (keeps the divergence invariant under joint rescaling), normalize
Vector to_distribution(const Vector& v) {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    if (range == 0.0)
        return Vector(v.size(), 1.0 / double(v.size()));
    const double eps = kKlEpsilon * range;
    Vector out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] - lo + eps;
        sum += out[i];
    }
    for (double& e : out)
        e /= sum;
    return out;
}

} // namespace

double kl_divergence_image(const Vector& x, const Vector& x_hat) {
    if (x.size() != x_hat.size())
        throw ShapeError("kl_divergence_image: lengths differ");
    if (x.empty())
        throw ShapeError("kl_divergence_image: empty vectors");
    const Vector p = to_distribution(x);
    const Vector q = to_distribution(x_hat);
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        kl += p[i] * std::log(p[i] / q[i]);
    return std::max(kl, 0.0); // clamp the tiny negative float residue of KL(x,x)
}

std::vector<SweepRow> drop_sweep(const MlpModel& model, const Dataset& test,
                                 const std::vector<double>& p_list, std::size_t trials,
                                 std::uint64_t rng_seed, std::size_t cut) {
    model.check_consistent();
    if (trials < 1)
        throw Error("drop_sweep: trials must be >= 1");
    if (test.empty())
        throw Error("drop_sweep: empty test set");

    const MlpModel front = front_slice(model, cut);
    const MlpModel rear = rear_slice(model, cut);

    // masking only zeroes slots of the plain boundary activations
    // (non-interference), so the client half runs once per sample and
    // every trial reuses it
    std::vector<Vector> boundary;
    boundary.reserve(test.size());
    SplitPlan plain;
    plain.cut = cut;
    for (const Vector& x : test.images)
        boundary.push_back(client_forward(front, x, plain).activations);
    const std::size_t width = boundary.front().size();

    std::vector<SweepRow> rows;
    for (std::size_t pi = 0; pi < p_list.size(); ++pi) {
        const double p = p_list[pi];
        SweepRow row;
        row.p = p;
        if (p == 0.0) {
            const double acc = evaluate(model, test);
            row.mean_accuracy = row.max_acc = row.min_acc = acc;
            row.trials = 1;
            row.has_std = false;
            rows.push_back(row);
            continue;
        }

        std::vector<double> accs;
        for (std::size_t t = 0; t < trials; ++t) {
            Rng trial_rng(mix64(mix64(rng_seed, t), pi));
            std::size_t correct = 0;
            for (std::size_t n = 0; n < test.size(); ++n) {
                Vector masked = boundary[n];
                const DropMask mask = make_mask(width, p, mix64(trial_rng.next_u64()));
                for (std::size_t pos : mask.dropped)
                    masked[pos] = 0.0;
                const Vector probs = server_forward(rear, masked);
                const auto arg = std::distance(
                    probs.begin(), std::max_element(probs.begin(), probs.end()));
                if (int(arg) == test.labels[n])
                    ++correct;
            }
            accs.push_back(double(correct) / double(test.size()));
        }

        double mean = 0.0;
        for (double a : accs)
            mean += a;
        mean /= double(accs.size());
        double var = 0.0;
        for (double a : accs)
            var += (a - mean) * (a - mean);
        var /= double(accs.size());

        row.mean_accuracy = mean;
        row.std_dev = std::sqrt(var);
        row.max_acc = *std::max_element(accs.begin(), accs.end());
        row.min_acc = *std::min_element(accs.begin(), accs.end());
        row.trials = trials;
        row.has_std = true;
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out.precision(10);
    out << "p,mean_accuracy,std,max,min\n";
    for (const SweepRow& r : rows) {
        out << r.p << ',' << r.mean_accuracy << ',';
        if (r.has_std)
            out << r.std_dev;
        else
            out << "NA";
        out << ',' << r.max_acc << ',' << r.min_acc << '\n';
    }
    return out.str();
}

} // namespace splitinfer

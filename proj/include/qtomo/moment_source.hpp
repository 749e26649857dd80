#pragma once

// Uniform access to raw quadrature moments, either exact (from a state) or
// empirical (from a dataset, with bootstrap replicates for error bars).

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "qtomo/homodyne_lab.hpp"

namespace qtomo {

class MomentSource {
public:
    virtual ~MomentSource() = default;

    virtual bool has_slice(int mode, double theta) const = 0;
    /// Raw <X^n> for the form quadrature_form(mode, theta). Throws MissingData.
    virtual double slice_moment(int mode, double theta, int n) const = 0;

    virtual bool has_joint(double theta1, double theta2) const = 0;
    /// Raw <X1^n X2^m> for modes 1, 2 at phases (theta1, theta2).
    virtual double joint_moment(double theta1, double theta2, int n, int m) const = 0;

    /// Bootstrap replicates; empty for exact sources.
    virtual std::size_t replicate_count() const { return 0; }
    virtual const MomentSource& replicate(std::size_t b) const;

    bool exact() const { return replicate_count() == 0; }
};

/// f(src) with the spread of f over the replicates as its error.
Estimate evaluate(const MomentSource& src, const std::function<double(const MomentSource&)>& f);
std::vector<Estimate> evaluate_vector(const MomentSource& src,
                                      const std::function<std::vector<double>(const MomentSource&)>& f);

/// Raw moment of a Gaussian with the given mean and variance.
double gaussian_raw_moment(double mean, double variance, int n);

/// Exact moments of a state. Grid states are Radon-transformed on demand and cached.
class StateSource final : public MomentSource {
public:
    explicit StateSource(State state, RadonOptions radon = {});

    bool has_slice(int, double) const override { return true; }
    double slice_moment(int mode, double theta, int n) const override;
    bool has_joint(double, double) const override { return true; }
    double joint_moment(double theta1, double theta2, int n, int m) const override;

    const State& state() const { return state_; }

private:
    State state_;
    RadonOptions radon_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<int, long long>, std::vector<double>> slice_cache_;
    mutable std::map<std::pair<long long, long long>, std::vector<double>> joint_cache_;
};

/// Moments of a homodyne dataset. Group (mode, theta) lookups match theta
/// within 1e-9 rad and fall back to theta + pi with a (-1)^n sign.
class DatasetSource final : public MomentSource {
public:
    explicit DatasetSource(const HomodyneDataset& data, BootstrapOptions opts = {});
    ~DatasetSource() override;

    bool has_slice(int mode, double theta) const override;
    double slice_moment(int mode, double theta, int n) const override;
    bool has_joint(double theta1, double theta2) const override;
    double joint_moment(double theta1, double theta2, int n, int m) const override;

    std::size_t replicate_count() const override;
    const MomentSource& replicate(std::size_t b) const override;

    struct Group;
    std::size_t group_count() const;

private:
    class Replicate;
    friend class Replicate;

    double slice_at(std::size_t rep, int mode, double theta, int n) const;
    double joint_at(std::size_t rep, double theta1, double theta2, int n, int m) const;

    BootstrapOptions opts_;
    std::vector<std::unique_ptr<Group>> groups_;
    std::vector<std::unique_ptr<Replicate>> replicates_;
};

}  // namespace qtomo

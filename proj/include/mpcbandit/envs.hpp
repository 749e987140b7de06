// Bandit environments: a digit-classification stream (IDX images reduced by
// PCA to unit-norm feature vectors, reward = correct class) and a clustered
// synthetic stream (K-means arms, Gaussian-kernel Bernoulli rewards).
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcbandit/ring.hpp"
#include "mpcbandit/rng.hpp"

namespace mpcbandit {

struct EnvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Feature stream plus per-arm binary reward. reward(t, arm) is deterministic
// in (t, arm) for a fixed environment, so independent replays of the same
// episode observe identical draws. context(t) cycles past size().
class Env {
  public:
    virtual ~Env() = default;
    virtual int dim() const = 0;
    virtual int arms() const = 0;
    virtual std::size_t size() const = 0;
    virtual const std::vector<double>& context(std::size_t t) = 0;
    virtual int reward(std::size_t t, int arm) = 0; // in {0,1}
};

// Raw IDX pair (big-endian headers): image bytes plus integer labels.
struct IdxData {
    std::size_t count = 0;
    std::size_t pixels = 0;
    std::vector<std::uint8_t> bytes; // count * pixels
    std::vector<int> labels;         // count
};

IdxData load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit = 0);

// Creates dir/train-images-idx3-ubyte and dir/train-labels-idx1-ubyte if they
// are missing: a synthetic 10-class stand-in with the same container format
// (clustered 28x28 images), so the pipeline runs without the real dataset.
void ensure_idx_dataset(const std::string& dir, std::size_t count = 6000, u64 seed = 9);

struct PcaModel {
    std::size_t pixels = 0;
    int components = 0;
    std::vector<double> mean;       // pixels
    std::vector<double> basis;      // components x pixels, row-major
    double explained_ratio = 0;     // captured variance fraction
};

// Principal components of n p-dim rows (row-major data), largest variance
// first. Throws if comps > p.
PcaModel fit_pca(const std::vector<double>& data, std::size_t n, std::size_t p, int comps);
void save_pca(const std::string& path, const PcaModel& m);
PcaModel load_pca(const std::string& path);

// Digit stream: project each image onto the top PCA components and normalize
// to unit length; reward is 1 exactly when the arm equals the digit label.
class MnistPcaEnv : public Env {
  public:
    // dir must hold train-images-idx3-ubyte / train-labels-idx1-ubyte.
    // cache_path, when non-empty, reuses or writes the fitted projection.
    MnistPcaEnv(const std::string& dir, int components = 20, std::size_t limit = 0,
                const std::string& cache_path = "");

    int dim() const override { return comps_; }
    int arms() const override { return 10; }
    std::size_t size() const override { return features_.size(); }
    const std::vector<double>& context(std::size_t t) override {
        return features_[t % features_.size()];
    }
    int reward(std::size_t t, int arm) override {
        return arm == labels_[t % labels_.size()] ? 1 : 0;
    }

    const std::vector<int>& labels() const { return labels_; }
    double explained_ratio() const { return explained_; }

  private:
    int comps_;
    double explained_;
    std::vector<std::vector<double>> features_;
    std::vector<int> labels_;
};

struct KmeansConfig {
    int k = 10;
    double sigma = 0.5;   // kernel width
    int max_iters = 300;
    u64 seed = 1;
};

// Clustered stream: arms are K-means clusters of the supplied points; pull
// reward is Bernoulli with probability exp(-dist/(2 sigma)), normalized so
// each point's best arm has probability 1.
class KmeansEnv : public Env {
  public:
    // points: n rows of d values, row-major. Throws if k > n.
    KmeansEnv(std::vector<double> points, std::size_t n, int d, KmeansConfig cfg);

    int dim() const override { return d_; }
    int arms() const override { return cfg_.k; }
    std::size_t size() const override { return n_; }
    const std::vector<double>& context(std::size_t t) override;
    int reward(std::size_t t, int arm) override;

    // Reward probability for pulling `arm` at step t.
    double nu(std::size_t t, int arm) const;
    const std::vector<double>& centers() const { return centers_; } // k x d

  private:
    std::size_t n_;
    int d_;
    KmeansConfig cfg_;
    std::vector<double> points_;   // n x d
    std::vector<double> centers_;  // k x d
    mutable std::vector<double> row_;

    double distance(std::size_t t, int arm) const;
};

// K gaussian blobs in d dims, n unit-normalized rows (row-major). spread
// scales the center positions, noise the per-coordinate jitter.
std::vector<double> gaussian_blobs(int k, int d, std::size_t n, double spread, double noise,
                                   u64 seed);

// Contiguous per-party feature blocks; dims must sum to x.size().
std::vector<std::vector<double>> split_features(const std::vector<double>& x,
                                                const std::vector<int>& dims);
// Near-even dims: first (dim % parties) parties get one extra feature.
std::vector<int> even_split(int dim, int parties);

} // namespace mpcbandit

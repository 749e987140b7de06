#include "mpcbandit/envs.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sys/stat.h>

namespace mpcbandit {

namespace {

bool file_exists(const std::string& path) {
    struct stat st;
    return ::stat(path.c_str(), &st) == 0;
}

u64 read_be32(std::FILE* f, const std::string& path) {
    unsigned char b[4];
    if (std::fread(b, 1, 4, f) != 4) throw EnvError("truncated IDX header: " + path);
    return (u64(b[0]) << 24) | (u64(b[1]) << 16) | (u64(b[2]) << 8) | u64(b[3]);
}

void write_be32(std::FILE* f, std::uint32_t x) {
    unsigned char b[4] = {(unsigned char)(x >> 24), (unsigned char)(x >> 16),
                          (unsigned char)(x >> 8), (unsigned char)x};
    std::fwrite(b, 1, 4, f);
}

struct FileCloser {
    std::FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

} // namespace

IdxData load_idx(const std::string& images_path, const std::string& labels_path,
                 std::size_t limit) {
    std::FILE* fi = std::fopen(images_path.c_str(), "rb");
    if (!fi) throw EnvError("cannot open IDX images: " + images_path);
    FileCloser ci{fi};
    if (read_be32(fi, images_path) != 0x0803) throw EnvError("bad IDX image magic: " + images_path);
    std::size_t n = read_be32(fi, images_path);
    std::size_t rows = read_be32(fi, images_path);
    std::size_t cols = read_be32(fi, images_path);

    std::FILE* fl = std::fopen(labels_path.c_str(), "rb");
    if (!fl) throw EnvError("cannot open IDX labels: " + labels_path);
    FileCloser cl{fl};
    if (read_be32(fl, labels_path) != 0x0801) throw EnvError("bad IDX label magic: " + labels_path);
    std::size_t nl = read_be32(fl, labels_path);
    if (nl != n) throw EnvError("IDX image/label counts differ");

    if (limit && limit < n) n = limit;
    IdxData out;
    out.count = n;
    out.pixels = rows * cols;
    out.bytes.resize(n * out.pixels);
    if (std::fread(out.bytes.data(), 1, out.bytes.size(), fi) != out.bytes.size())
        throw EnvError("truncated IDX image data: " + images_path);
    std::vector<unsigned char> lab(n);
    if (std::fread(lab.data(), 1, n, fl) != n)
        throw EnvError("truncated IDX label data: " + labels_path);
    out.labels.assign(lab.begin(), lab.end());
    return out;
}

void ensure_idx_dataset(const std::string& dir, std::size_t count, u64 seed) {
    std::string imgs = dir + "/train-images-idx3-ubyte";
    std::string labs = dir + "/train-labels-idx1-ubyte";
    if (file_exists(imgs) && file_exists(labs)) return;
    ::mkdir(dir.c_str(), 0755);

    const int side = 28, pixels = side * side, classes = 10;
    // Class prototypes: a few smooth bumps per class at class-specific spots.
    Prng proto_rng(mix_seed(seed, 0x50524F54));
    std::vector<double> protos(classes * pixels, 0.0);
    for (int c = 0; c < classes; ++c) {
        for (int bump = 0; bump < 3; ++bump) {
            double cy = 4 + proto_rng.real01() * 20, cx = 4 + proto_rng.real01() * 20;
            double amp = 120 + proto_rng.real01() * 80, rad = 3 + proto_rng.real01() * 3;
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) {
                    double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    protos[c * pixels + y * side + x] += amp * std::exp(-d2 / (2 * rad * rad));
                }
        }
    }

    std::FILE* fi = std::fopen(imgs.c_str(), "wb");
    if (!fi) throw EnvError("cannot create dataset file: " + imgs);
    FileCloser ci{fi};
    std::FILE* fl = std::fopen(labs.c_str(), "wb");
    if (!fl) throw EnvError("cannot create dataset file: " + labs);
    FileCloser cl{fl};

    write_be32(fi, 0x0803);
    write_be32(fi, (std::uint32_t)count);
    write_be32(fi, side);
    write_be32(fi, side);
    write_be32(fl, 0x0801);
    write_be32(fl, (std::uint32_t)count);

    Prng rng(mix_seed(seed, 0x44415441));
    std::vector<unsigned char> img(pixels);
    for (std::size_t i = 0; i < count; ++i) {
        int label = (int)rng.below(classes);
        for (int p = 0; p < pixels; ++p) {
            double v = protos[label * pixels + p] + rng.normal() * 20.0;
            img[p] = (unsigned char)std::clamp(v, 0.0, 255.0);
        }
        std::fwrite(img.data(), 1, pixels, fi);
        unsigned char lb = (unsigned char)label;
        std::fwrite(&lb, 1, 1, fl);
    }
}

PcaModel fit_pca(const std::vector<double>& data, std::size_t n, std::size_t p, int comps) {
    if (comps <= 0 || (std::size_t)comps > p) throw EnvError("component count out of range");
    if (n == 0) throw EnvError("empty dataset");

    PcaModel m;
    m.pixels = p;
    m.components = comps;
    m.mean.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) m.mean[j] += data[i * p + j];
    for (double& v : m.mean) v /= double(n);

    Eigen::MatrixXd X(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) X(i, j) = data[i * p + j] - m.mean[j];
    Eigen::MatrixXd cov = (X.transpose() * X) / double(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw EnvError("eigendecomposition failed");
    const auto& vals = es.eigenvalues();   // ascending
    const auto& vecs = es.eigenvectors();

    double total = 0, kept = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i) total += std::max(vals(i), 0.0);
    m.basis.resize(std::size_t(comps) * p);
    for (int c = 0; c < comps; ++c) {
        Eigen::Index src = vals.size() - 1 - c;
        kept += std::max(vals(src), 0.0);
        for (std::size_t j = 0; j < p; ++j) m.basis[std::size_t(c) * p + j] = vecs(j, src);
    }
    m.explained_ratio = total > 0 ? kept / total : 0.0;
    return m;
}

void save_pca(const std::string& path, const PcaModel& m) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw EnvError("cannot write projection cache: " + path);
    FileCloser c{f};
    const std::uint32_t magic = 0x50434131, version = 1;
    std::fwrite(&magic, 4, 1, f);
    std::fwrite(&version, 4, 1, f);
    std::uint64_t px = m.pixels;
    std::uint32_t comps = m.components;
    std::fwrite(&px, 8, 1, f);
    std::fwrite(&comps, 4, 1, f);
    std::fwrite(&m.explained_ratio, 8, 1, f);
    std::fwrite(m.mean.data(), 8, m.mean.size(), f);
    std::fwrite(m.basis.data(), 8, m.basis.size(), f);
}

PcaModel load_pca(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw EnvError("cannot read projection cache: " + path);
    FileCloser c{f};
    std::uint32_t magic = 0, version = 0, comps = 0;
    std::uint64_t px = 0;
    PcaModel m;
    if (std::fread(&magic, 4, 1, f) != 1 || magic != 0x50434131 ||
        std::fread(&version, 4, 1, f) != 1 || version != 1 || std::fread(&px, 8, 1, f) != 1 ||
        std::fread(&comps, 4, 1, f) != 1 || std::fread(&m.explained_ratio, 8, 1, f) != 1)
        throw EnvError("bad projection cache: " + path);
    m.pixels = px;
    m.components = (int)comps;
    m.mean.resize(px);
    m.basis.resize(std::size_t(comps) * px);
    if (std::fread(m.mean.data(), 8, m.mean.size(), f) != m.mean.size() ||
        std::fread(m.basis.data(), 8, m.basis.size(), f) != m.basis.size())
        throw EnvError("truncated projection cache: " + path);
    return m;
}

MnistPcaEnv::MnistPcaEnv(const std::string& dir, int components, std::size_t limit,
                         const std::string& cache_path)
    : comps_(components) {
    IdxData idx = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte", limit);
    labels_ = idx.labels;

    std::vector<double> data(idx.count * idx.pixels);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = double(idx.bytes[i]) / 255.0;

    PcaModel model;
    bool fitted = false;
    if (!cache_path.empty() && file_exists(cache_path)) {
        model = load_pca(cache_path);
        if (model.pixels != idx.pixels || model.components != components)
            fitted = false; // stale cache: refit below
        else
            fitted = true;
    }
    if (!fitted) {
        model = fit_pca(data, idx.count, idx.pixels, components);
        if (!cache_path.empty()) save_pca(cache_path, model);
    }
    explained_ = model.explained_ratio;

    features_.assign(idx.count, std::vector<double>(components, 0.0));
    for (std::size_t i = 0; i < idx.count; ++i) {
        auto& out = features_[i];
        for (int c = 0; c < components; ++c) {
            double dot = 0;
            const double* row = &model.basis[std::size_t(c) * idx.pixels];
            const double* px = &data[i * idx.pixels];
            for (std::size_t j = 0; j < idx.pixels; ++j) dot += row[j] * (px[j] - model.mean[j]);
            out[c] = dot;
        }
        double norm = 0;
        for (double v : out) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0)
            for (double& v : out) v /= norm;
        else
            out[0] = 1.0; // degenerate all-zero projection: pin to a unit axis
    }
}

KmeansEnv::KmeansEnv(std::vector<double> points, std::size_t n, int d, KmeansConfig cfg)
    : n_(n), d_(d), cfg_(cfg), points_(std::move(points)) {
    if (cfg_.k < 2) throw EnvError("need at least two clusters");
    if ((std::size_t)cfg_.k > n_) throw EnvError("more clusters than points");
    if (points_.size() != n_ * std::size_t(d_)) throw EnvError("point buffer size mismatch");

    const int k = cfg_.k;
    Prng rng(mix_seed(cfg_.seed, 0x4B4D4E53));

    // k-means++ seeding.
    std::vector<std::size_t> chosen;
    chosen.push_back(rng.below(n_));
    std::vector<double> d2(n_, 0.0);
    auto dist2 = [&](std::size_t i, std::size_t j) {
        double s = 0;
        for (int c = 0; c < d_; ++c) {
            double t = points_[i * d_ + c] - points_[j * d_ + c];
            s += t * t;
        }
        return s;
    };
    while ((int)chosen.size() < k) {
        double total = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            double best = dist2(i, chosen[0]);
            for (std::size_t c = 1; c < chosen.size(); ++c) best = std::min(best, dist2(i, chosen[c]));
            d2[i] = best;
            total += best;
        }
        double target = rng.real01() * total, acc = 0;
        std::size_t pick = n_ - 1;
        for (std::size_t i = 0; i < n_; ++i) {
            acc += d2[i];
            if (acc >= target) {
                pick = i;
                break;
            }
        }
        chosen.push_back(pick);
    }
    centers_.resize(std::size_t(k) * d_);
    for (int c = 0; c < k; ++c)
        for (int j = 0; j < d_; ++j) centers_[std::size_t(c) * d_ + j] = points_[chosen[c] * d_ + j];

    // Lloyd iterations.
    std::vector<int> assign(n_, -1);
    for (int iter = 0; iter < cfg_.max_iters; ++iter) {
        bool moved = false;
        for (std::size_t i = 0; i < n_; ++i) {
            int best = 0;
            double bestd = 0;
            for (int c = 0; c < k; ++c) {
                double s = 0;
                for (int j = 0; j < d_; ++j) {
                    double t = points_[i * d_ + j] - centers_[std::size_t(c) * d_ + j];
                    s += t * t;
                }
                if (c == 0 || s < bestd) {
                    bestd = s;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                moved = true;
            }
        }
        if (!moved) break;
        std::vector<double> sum(std::size_t(k) * d_, 0.0);
        std::vector<std::size_t> cnt(k, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            ++cnt[assign[i]];
            for (int j = 0; j < d_; ++j) sum[std::size_t(assign[i]) * d_ + j] += points_[i * d_ + j];
        }
        for (int c = 0; c < k; ++c)
            if (cnt[c])
                for (int j = 0; j < d_; ++j) centers_[std::size_t(c) * d_ + j] = sum[std::size_t(c) * d_ + j] / double(cnt[c]);
    }
}

const std::vector<double>& KmeansEnv::context(std::size_t t) {
    row_.assign(points_.begin() + (t % n_) * d_, points_.begin() + ((t % n_) + 1) * d_);
    return row_;
}

double KmeansEnv::distance(std::size_t t, int arm) const {
    std::size_t i = t % n_;
    double s = 0;
    for (int j = 0; j < d_; ++j) {
        double v = points_[i * d_ + j] - centers_[std::size_t(arm) * d_ + j];
        s += v * v;
    }
    return std::sqrt(s);
}

double KmeansEnv::nu(std::size_t t, int arm) const {
    if (arm < 0 || arm >= cfg_.k) throw EnvError("arm out of range");
    double best = 0;
    for (int c = 0; c < cfg_.k; ++c)
        best = std::max(best, std::exp(-distance(t, c) / (2.0 * cfg_.sigma)));
    return std::exp(-distance(t, arm) / (2.0 * cfg_.sigma)) / best;
}

int KmeansEnv::reward(std::size_t t, int arm) {
    // Deterministic in (t, arm): replays across learners see the same draw.
    Prng g(mix_seed(mix_seed(cfg_.seed, 0x52455744), u64(t) * 131071 + u64(arm) + 1));
    return g.real01() < nu(t, arm) ? 1 : 0;
}

std::vector<double> gaussian_blobs(int k, int d, std::size_t n, double spread, double noise,
                                   u64 seed) {
    Prng rng(mix_seed(seed, 0x424C4F42));
    std::vector<double> centers(std::size_t(k) * d);
    for (auto& v : centers) v = rng.normal() * spread;
    std::vector<double> out(n * std::size_t(d));
    for (std::size_t i = 0; i < n; ++i) {
        int c = int(i % std::size_t(k));
        double norm = 0;
        for (int j = 0; j < d; ++j) {
            double v = centers[std::size_t(c) * d + j] + rng.normal() * noise;
            out[i * d + j] = v;
            norm += v * v;
        }
        norm = std::sqrt(norm);
        if (norm > 0)
            for (int j = 0; j < d; ++j) out[i * d + j] /= norm;
    }
    return out;
}

std::vector<std::vector<double>> split_features(const std::vector<double>& x,
                                                const std::vector<int>& dims) {
    std::size_t total = 0;
    for (int d : dims) total += std::size_t(d);
    if (total != x.size()) throw EnvError("party dims do not sum to the feature count");
    std::vector<std::vector<double>> out;
    std::size_t at = 0;
    for (int d : dims) {
        out.emplace_back(x.begin() + at, x.begin() + at + d);
        at += d;
    }
    return out;
}

std::vector<int> even_split(int dim, int parties) {
    std::vector<int> dims(parties, dim / parties);
    for (int p = 0; p < dim % parties; ++p) ++dims[p];
    return dims;
}

} // namespace mpcbandit

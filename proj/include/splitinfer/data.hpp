#ifndef SPLITINFER_DATA_HPP
#define SPLITINFER_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "splitinfer/linalg.hpp"

namespace splitinfer {

struct Dataset {
    std::vector<Vector> images; // pixels scaled to [0, 1]
    std::vector<int> labels;    // class indices < class_count
    int class_count = 0;

    std::size_t size() const { return images.size(); }
    bool empty() const { return images.empty(); }
    std::size_t dim() const { return images.empty() ? 0 : images.front().size(); }
};

// IDX format, big-endian: image files carry magic 0x00000803 and
// count/rows/cols headers, label files carry magic 0x00000801 and a
// count. Pixel bytes scale as value / 255. Item counts of the two
// files must agree.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Parse from in-memory buffers (the file loader and tests share this).
Dataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes);

// First 50k / last 10k split of the 60k MNIST train file.
struct TrainValSplit {
    Dataset train;
    Dataset validation;
};
TrainValSplit split_train_validation(const Dataset& full, std::size_t train_count = 50000);

// Gaussian blobs at distinct unit-vector centers, clipped to [0, 1].
// Linearly separable for small noise; deterministic in seed.
Dataset synth_blobs(int classes, int per_class, std::size_t dim, std::uint64_t seed,
                    double noise = 0.08);

} // namespace splitinfer

#endif

#include "splitinfer/data.hpp"

#include <algorithm>
#include <fstream>

#include "splitinfer/rng.hpp"

namespace splitinfer {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t off,
                        const char* what) {
    if (off + 4 > buf.size())
        throw TruncationError(std::string("IDX header truncated reading ") + what);
    return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
           (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

std::vector<std::uint8_t> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

Dataset parse_idx(const std::vector<std::uint8_t>& image_bytes,
                  const std::vector<std::uint8_t>& label_bytes) {
    const std::uint32_t img_magic = read_be32(image_bytes, 0, "image magic");
    if (img_magic != kImageMagic)
        throw FormatError("bad image magic 0x" + std::to_string(img_magic) +
                          ", want 0x00000803");
    const std::uint32_t lbl_magic = read_be32(label_bytes, 0, "label magic");
    if (lbl_magic != kLabelMagic)
        throw FormatError("bad label magic 0x" + std::to_string(lbl_magic) +
                          ", want 0x00000801");

    const std::uint32_t img_count = read_be32(image_bytes, 4, "image count");
    const std::uint32_t rows = read_be32(image_bytes, 8, "rows");
    const std::uint32_t cols = read_be32(image_bytes, 12, "cols");
    const std::uint32_t lbl_count = read_be32(label_bytes, 4, "label count");
    if (img_count != lbl_count)
        throw FormatError("image count " + std::to_string(img_count) +
                          " != label count " + std::to_string(lbl_count));

    const std::size_t pixels = std::size_t(rows) * cols;
    if (image_bytes.size() < 16 + std::size_t(img_count) * pixels)
        throw TruncationError("image file holds fewer pixels than its header declares");
    if (label_bytes.size() < 8 + lbl_count)
        throw TruncationError("label file holds fewer labels than its header declares");

    Dataset ds;
    ds.class_count = 10;
    ds.images.reserve(img_count);
    ds.labels.reserve(lbl_count);
    for (std::uint32_t n = 0; n < img_count; ++n) {
        Vector img(pixels);
        const std::uint8_t* p = image_bytes.data() + 16 + std::size_t(n) * pixels;
        for (std::size_t i = 0; i < pixels; ++i)
            img[i] = p[i] / 255.0;
        ds.images.push_back(std::move(img));
        ds.labels.push_back(label_bytes[8 + n]);
    }
    return ds;
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    return parse_idx(slurp(images_path), slurp(labels_path));
}

TrainValSplit split_train_validation(const Dataset& full, std::size_t train_count) {
    if (train_count > full.size())
        throw Error("train split " + std::to_string(train_count) + " exceeds dataset size " +
                    std::to_string(full.size()));
    TrainValSplit out;
    out.train.class_count = out.validation.class_count = full.class_count;
    out.train.images.assign(full.images.begin(), full.images.begin() + train_count);
    out.train.labels.assign(full.labels.begin(), full.labels.begin() + train_count);
    out.validation.images.assign(full.images.begin() + train_count, full.images.end());
    out.validation.labels.assign(full.labels.begin() + train_count, full.labels.end());
    return out;
}

Dataset synth_blobs(int classes, int per_class, std::size_t dim, std::uint64_t seed,
                    double noise) {
    if (per_class <= 0)
        throw Error("synth_blobs: per_class must be >= 1");
    if (dim < std::size_t(classes))
        throw Error("synth_blobs: dim must be >= classes so centers stay distinct");

    Rng rng(seed);
    Dataset ds;
    ds.class_count = classes;
    ds.images.reserve(std::size_t(classes) * per_class);
    for (int n = 0; n < per_class; ++n) {
        for (int c = 0; c < classes; ++c) {
            Vector x(dim, 0.0);
            x[std::size_t(c)] = 1.0; // unit-vector center e_c
            for (std::size_t i = 0; i < dim; ++i) {
                x[i] += noise * rng.next_gaussian();
                x[i] = std::clamp(x[i], 0.0, 1.0);
            }
            ds.images.push_back(std::move(x));
            ds.labels.push_back(c);
        }
    }
    return ds;
}

} // namespace splitinfer

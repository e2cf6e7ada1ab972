#include "fedad/idx.hpp"

#include <cmath>
#include <fstream>

#include "fedad/errors.hpp"

namespace fedad {
namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw IdxError(IdxErrorKind::Truncated, "truncated IDX header while reading " + what);
    }
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot open IDX image file: " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot open IDX label file: " + labels_path);

    const std::uint32_t img_magic = read_u32_be(img, "image magic");
    if (img_magic != kImagesMagic) {
        throw IdxError(IdxErrorKind::BadMagic, "bad IDX image magic in " + images_path);
    }
    const std::uint32_t n_images = read_u32_be(img, "image count");
    const std::uint32_t n_rows = read_u32_be(img, "image rows");
    const std::uint32_t n_cols = read_u32_be(img, "image cols");

    const std::uint32_t lab_magic = read_u32_be(lab, "label magic");
    if (lab_magic != kLabelsMagic) {
        throw IdxError(IdxErrorKind::BadMagic, "bad IDX label magic in " + labels_path);
    }
    const std::uint32_t n_labels = read_u32_be(lab, "label count");

    if (n_images != n_labels) {
        throw IdxError(IdxErrorKind::CountMismatch,
                       "IDX image/label count mismatch: " + std::to_string(n_images) +
                           " images vs " + std::to_string(n_labels) + " labels");
    }
    if (n_images == 0) {
        throw IdxError(IdxErrorKind::EmptyPayload, "IDX file holds zero images: " + images_path);
    }

    const std::size_t dim = std::size_t(n_rows) * n_cols;
    LabeledDataset out;
    out.features = Matrix(n_images, dim);
    out.labels.resize(n_images);
    out.image_rows = n_rows;
    out.image_cols = n_cols;

    std::vector<unsigned char> buf(dim);
    for (std::uint32_t i = 0; i < n_images; ++i) {
        if (!img.read(reinterpret_cast<char*>(buf.data()), std::streamsize(dim))) {
            throw IdxError(IdxErrorKind::Truncated,
                           "truncated IDX pixel payload at image " + std::to_string(i));
        }
        double* row = out.features.row(i);
        for (std::size_t j = 0; j < dim; ++j) row[j] = buf[j] / 255.0;
    }
    std::vector<unsigned char> lbuf(n_labels);
    if (!lab.read(reinterpret_cast<char*>(lbuf.data()), std::streamsize(n_labels))) {
        throw IdxError(IdxErrorKind::Truncated, "truncated IDX label payload in " + labels_path);
    }

    std::vector<bool> seen(256, false);
    for (std::uint32_t i = 0; i < n_labels; ++i) {
        out.labels[i] = lbuf[i];
        seen[lbuf[i]] = true;
    }
    for (int c = 0; c < 256; ++c) {
        if (seen[c]) out.class_ids.push_back(c);
    }
    out.validate();
    return out;
}

void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path) {
    if (dataset.image_rows == 0 || dataset.image_cols == 0) {
        throw DataError("write_idx: dataset is not image-shaped");
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw DataError("cannot create IDX image file: " + images_path);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw DataError("cannot create IDX label file: " + labels_path);

    write_u32_be(img, kImagesMagic);
    write_u32_be(img, std::uint32_t(dataset.features.rows));
    write_u32_be(img, std::uint32_t(dataset.image_rows));
    write_u32_be(img, std::uint32_t(dataset.image_cols));
    const std::size_t dim = dataset.image_rows * dataset.image_cols;
    std::vector<unsigned char> buf(dim);
    for (std::size_t i = 0; i < dataset.features.rows; ++i) {
        const double* row = dataset.features.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            const double v = row[j] < 0.0 ? 0.0 : (row[j] > 1.0 ? 1.0 : row[j]);
            buf[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        img.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(dim));
    }

    write_u32_be(lab, kLabelsMagic);
    write_u32_be(lab, std::uint32_t(dataset.labels.size()));
    for (int l : dataset.labels) {
        const unsigned char b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

} // namespace fedad

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ptl {

struct Shape {
    std::size_t batch = 1;
    std::size_t height = 1;
    std::size_t width = 1;
    std::size_t channels = 1;

    std::size_t size() const { return batch * height * width * channels; }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense N x H x W x Ch tensor of doubles, row-major with channels fastest.
class ImageTensor {
public:
    ImageTensor() : ImageTensor(Shape{}) {}
    explicit ImageTensor(Shape shape, double fill = 0.0);
    ImageTensor(Shape shape, std::vector<double> data);

    const Shape& shape() const { return shape_; }
    std::size_t batch() const { return shape_.batch; }
    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t channels() const { return shape_.channels; }
    std::size_t size() const { return data_.size(); }

    std::size_t index(std::size_t n, std::size_t y, std::size_t x, std::size_t ch) const {
        return ((n * shape_.height + y) * shape_.width + x) * shape_.channels + ch;
    }

    double& operator()(std::size_t n, std::size_t y, std::size_t x, std::size_t ch) {
        return data_[index(n, y, x, ch)];
    }
    double operator()(std::size_t n, std::size_t y, std::size_t x, std::size_t ch) const {
        return data_[index(n, y, x, ch)];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

struct NetpbmImage {
    ImageTensor image;
    int maxval = 255;
};

// Reads P2/P3/P5/P6. Samples are scaled to [0,1] by maxval.
NetpbmImage read_netpbm(const std::filesystem::path& path);
NetpbmImage parse_netpbm(const std::string& bytes);
ImageTensor load_image(const std::filesystem::path& path);

// Binary P5 (1 channel) or P6 (3 channels). Values are clamped to [0,1]
// and rounded half-up onto the 0..maxval grid; 16-bit samples are big-endian.
std::string encode_netpbm(const ImageTensor& t, int maxval = 255);
void save_image(const ImageTensor& t, const std::filesystem::path& path, int maxval = 255);

struct MseResult {
    double loss = 0.0;
    ImageTensor grad;
};

MseResult mse(const ImageTensor& pred, const ImageTensor& target);

double dot(const ImageTensor& a, const ImageTensor& b);

}  // namespace ptl

#include "ptl/image_tensor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "ptl/error.hpp"

namespace ptl {

std::string to_string(const Shape& s) {
    std::ostringstream os;
    os << s.batch << "x" << s.height << "x" << s.width << "x" << s.channels;
    return os.str();
}

namespace {

void check_extents(const Shape& shape) {
    if (shape.batch == 0 || shape.height == 0 || shape.width == 0 || shape.channels == 0) {
        throw std::invalid_argument("image tensor extents must be >= 1, got " + to_string(shape));
    }
}

// Tokenizer over a netpbm header: whitespace separated, '#' to end of line is a comment.
class HeaderReader {
public:
    explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space_and_comments();
        std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
               bytes_[pos_] != '#') {
            ++pos_;
        }
        if (start == pos_) throw DataError("netpbm: truncated header");
        return bytes_.substr(start, pos_ - start);
    }

    long integer() {
        std::string tok = token();
        if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            throw DataError("netpbm: expected unsigned integer, got '" + tok + "'");
        }
        if (tok.size() > 9) throw DataError("netpbm: integer out of range '" + tok + "'");
        return std::stol(tok);
    }

    // Binary rasters start after exactly one whitespace byte following maxval.
    std::size_t raster_start() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            throw DataError("netpbm: truncated raster");
        }
        return pos_ + 1;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                return;
            }
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

ImageTensor::ImageTensor(Shape shape, double fill) : shape_(shape) {
    check_extents(shape_);
    data_.assign(shape_.size(), fill);
}

ImageTensor::ImageTensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    check_extents(shape_);
    if (data_.size() != shape_.size()) {
        throw std::invalid_argument("image tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + to_string(shape_));
    }
}

NetpbmImage parse_netpbm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw DataError("netpbm: malformed magic number");
    char kind = bytes[1];
    bool ascii = false;
    std::size_t channels = 1;
    switch (kind) {
        case '2': ascii = true; channels = 1; break;
        case '3': ascii = true; channels = 3; break;
        case '5': ascii = false; channels = 1; break;
        case '6': ascii = false; channels = 3; break;
        default: throw DataError("netpbm: malformed magic number 'P" + std::string(1, kind) + "'");
    }
    if (bytes.size() > 2 && !std::isspace(static_cast<unsigned char>(bytes[2])) && bytes[2] != '#') {
        throw DataError("netpbm: malformed magic number");
    }

    std::string rest = bytes.substr(2);
    HeaderReader header(rest);
    long width = header.integer();
    long height = header.integer();
    long maxval = header.integer();
    if (width <= 0 || height <= 0) throw DataError("netpbm: non-positive image size");
    if (maxval <= 0 || maxval > 65535) throw DataError("netpbm: maxval must be in [1, 65535]");

    Shape shape{1, static_cast<std::size_t>(height), static_cast<std::size_t>(width), channels};
    std::vector<double> data(shape.size());
    const double scale = static_cast<double>(maxval);

    if (ascii) {
        for (double& v : data) {
            long sample = 0;
            try {
                sample = header.integer();
            } catch (const DataError&) {
                throw DataError("netpbm: truncated raster");
            }
            if (sample > maxval) throw DataError("netpbm: sample exceeds maxval");
            v = static_cast<double>(sample) / scale;
        }
    } else {
        std::size_t offset = header.raster_start();
        std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
        if (rest.size() < offset + data.size() * bytes_per_sample) throw DataError("netpbm: truncated raster");
        const auto* raster = reinterpret_cast<const unsigned char*>(rest.data() + offset);
        for (std::size_t i = 0; i < data.size(); ++i) {
            long sample = bytes_per_sample == 2 ? (raster[2 * i] << 8) | raster[2 * i + 1] : raster[i];
            if (sample > maxval) throw DataError("netpbm: sample exceeds maxval");
            data[i] = static_cast<double>(sample) / scale;
        }
    }
    return NetpbmImage{ImageTensor(shape, std::move(data)), static_cast<int>(maxval)};
}

NetpbmImage read_netpbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return parse_netpbm(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

ImageTensor load_image(const std::filesystem::path& path) { return read_netpbm(path).image; }

std::string encode_netpbm(const ImageTensor& t, int maxval) {
    if (t.batch() != 1) throw DataError("save_image: batch size must be 1, got " + std::to_string(t.batch()));
    if (t.channels() != 1 && t.channels() != 3) {
        throw DataError("save_image: channel count must be 1 or 3, got " + std::to_string(t.channels()));
    }
    if (maxval < 1 || maxval > 65535) throw std::invalid_argument("save_image: maxval must be in [1, 65535]");

    std::string out = (t.channels() == 1 ? "P5\n" : "P6\n") + std::to_string(t.width()) + " " +
                      std::to_string(t.height()) + "\n" + std::to_string(maxval) + "\n";
    const bool wide = maxval > 255;
    out.reserve(out.size() + t.size() * (wide ? 2 : 1));
    for (double v : t.data()) {
        double clamped = std::clamp(v, 0.0, 1.0);
        auto q = static_cast<unsigned>(std::floor(clamped * maxval + 0.5));
        if (wide) out.push_back(static_cast<char>((q >> 8) & 0xff));
        out.push_back(static_cast<char>(q & 0xff));
    }
    return out;
}

void save_image(const ImageTensor& t, const std::filesystem::path& path, int maxval) {
    std::string bytes = encode_netpbm(t, maxval);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

MseResult mse(const ImageTensor& pred, const ImageTensor& target) {
    if (pred.shape() != target.shape()) {
        throw DataError("mse: shape mismatch " + to_string(pred.shape()) + " vs " + to_string(target.shape()));
    }
    const auto p = pred.data();
    const auto q = target.data();
    const double count = static_cast<double>(p.size());
    MseResult result{0.0, ImageTensor(pred.shape())};
    auto g = result.grad.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - q[i];
        sum += d * d;
        g[i] = 2.0 * d / count;
    }
    result.loss = sum / count;
    return result;
}

double dot(const ImageTensor& a, const ImageTensor& b) {
    if (a.shape() != b.shape()) throw DataError("dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

}  // namespace ptl

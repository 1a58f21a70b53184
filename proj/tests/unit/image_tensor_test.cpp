#include <gtest/gtest.h>

#include <fstream>

#include "fixtures.hpp"
#include "ptl/error.hpp"
#include "ptl/image_tensor.hpp"

namespace ptl {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

TEST(ImageTensor, RejectsZeroExtentsAndBadLength) {
    EXPECT_THROW(ImageTensor(Shape{1, 0, 3, 1}), std::invalid_argument);
    EXPECT_THROW(ImageTensor(Shape{1, 2, 2, 1}, std::vector<double>(3)), std::invalid_argument);
    ImageTensor t(Shape{2, 3, 4, 5});
    EXPECT_EQ(t.size(), 120u);
    EXPECT_EQ(t.index(1, 2, 3, 4), 119u);
    EXPECT_EQ(t.index(0, 0, 1, 0), 5u);  // channels fastest, then x
}

TEST(LoadImage, AsciiGraymapScalesByMaxval) {
    TempDir dir;
    write_text(dir / "a.pgm", "P2\n# comment line\n2 2\n255\n0 255 128 64\n");
    ImageTensor t = load_image(dir / "a.pgm");
    ASSERT_EQ(t.shape(), (Shape{1, 2, 2, 1}));
    EXPECT_EQ(t(0, 0, 0, 0), 0.0);
    EXPECT_EQ(t(0, 0, 1, 0), 1.0);
    EXPECT_DOUBLE_EQ(t(0, 1, 0, 0), 128.0 / 255.0);
    EXPECT_DOUBLE_EQ(t(0, 1, 1, 0), 64.0 / 255.0);
    EXPECT_NEAR(t(0, 1, 0, 0), 0.50196, 1e-5);
    EXPECT_NEAR(t(0, 1, 1, 0), 0.25098, 1e-5);
}

TEST(LoadImage, AsciiPixmapHasThreeChannels) {
    TempDir dir;
    write_text(dir / "a.ppm", "P3 1 1 # inline comment\n 10\n 10 5 0\n");
    ImageTensor t = load_image(dir / "a.ppm");
    ASSERT_EQ(t.shape(), (Shape{1, 1, 1, 3}));
    EXPECT_EQ(t(0, 0, 0, 0), 1.0);
    EXPECT_EQ(t(0, 0, 0, 1), 0.5);
    EXPECT_EQ(t(0, 0, 0, 2), 0.0);
}

TEST(LoadImage, ErrorCases) {
    TempDir dir;
    EXPECT_THROW(load_image(dir / "missing.pgm"), DataError);

    write_text(dir / "magic.pgm", "P9\n1 1\n255\n0\n");
    EXPECT_THROW(load_image(dir / "magic.pgm"), DataError);

    write_text(dir / "maxval0.pgm", "P2\n1 1\n0\n0\n");
    EXPECT_THROW(load_image(dir / "maxval0.pgm"), DataError);

    write_text(dir / "maxvalbig.pgm", "P2\n1 1\n65536\n0\n");
    EXPECT_THROW(load_image(dir / "maxvalbig.pgm"), DataError);

    write_text(dir / "short_ascii.pgm", "P2\n2 2\n255\n0 1 2\n");
    EXPECT_THROW(load_image(dir / "short_ascii.pgm"), DataError);

    write_text(dir / "short_bin.pgm", std::string("P5\n2 2\n255\n") + std::string(3, '\x01'));
    EXPECT_THROW(load_image(dir / "short_bin.pgm"), DataError);

    write_text(dir / "short_wide.ppm", std::string("P6\n1 1\n1000\n") + std::string(5, '\x01'));
    EXPECT_THROW(load_image(dir / "short_wide.ppm"), DataError);
}

TEST(SaveImage, ZeroImageWritesZeroRaster) {
    std::string bytes = encode_netpbm(ImageTensor(Shape{1, 4, 4, 1}), 255);
    const std::string header = "P5\n4 4\n255\n";
    ASSERT_EQ(bytes.size(), header.size() + 16);
    EXPECT_EQ(bytes.substr(0, header.size()), header);
    for (std::size_t i = header.size(); i < bytes.size(); ++i) EXPECT_EQ(bytes[i], '\0');
}

TEST(SaveImage, RoundsHalfUpAndClamps) {
    ImageTensor t(Shape{1, 1, 3, 1}, std::vector<double>{0.5, 1.7, -0.3});
    std::string bytes = encode_netpbm(t, 255);
    const std::size_t off = std::string("P5\n3 1\n255\n").size();
    EXPECT_EQ(static_cast<unsigned char>(bytes[off]), 128);
    EXPECT_EQ(static_cast<unsigned char>(bytes[off + 1]), 255);
    EXPECT_EQ(static_cast<unsigned char>(bytes[off + 2]), 0);
}

TEST(SaveImage, RejectsUnsupportedChannelsAndBatch) {
    TempDir dir;
    EXPECT_THROW(save_image(ImageTensor(Shape{1, 2, 2, 2}), dir / "x.pgm"), DataError);
    EXPECT_THROW(save_image(ImageTensor(Shape{2, 2, 2, 1}), dir / "x.pgm"), DataError);
    EXPECT_THROW(save_image(ImageTensor(Shape{1, 2, 2, 1}), dir / "no/such/dir/x.pgm"), DataError);
}

TEST(SaveImage, RoundTripWithinHalfQuantum) {
    Rng rng(11);
    TempDir dir;
    for (int maxval : {1, 7, 255, 256, 1000, 65535}) {
        for (std::size_t ch : {1u, 3u}) {
            ImageTensor t = testing::random_image(rng, Shape{1, 5, 7, ch});
            const auto path = dir / ("rt" + std::to_string(maxval) + (ch == 1 ? ".pgm" : ".ppm"));
            save_image(t, path, maxval);
            NetpbmImage back = read_netpbm(path);
            EXPECT_EQ(back.maxval, maxval);
            ASSERT_EQ(back.image.shape(), t.shape());
            double worst = 0.0;
            for (std::size_t i = 0; i < t.size(); ++i) {
                worst = std::max(worst, std::abs(back.image.data()[i] - t.data()[i]));
            }
            EXPECT_LE(worst, 0.5 / maxval + 1e-15) << "maxval " << maxval;
        }
    }
}

TEST(Mse, KnownValues) {
    ImageTensor a(Shape{1, 1, 2, 1}, std::vector<double>{1, 2});
    ImageTensor z(Shape{1, 1, 2, 1});
    MseResult r = mse(a, z);
    EXPECT_DOUBLE_EQ(r.loss, 2.5);
    EXPECT_DOUBLE_EQ(r.grad.data()[0], 1.0);
    EXPECT_DOUBLE_EQ(r.grad.data()[1], 2.0);

    MseResult same = mse(a, a);
    EXPECT_EQ(same.loss, 0.0);
    for (double g : same.grad.data()) EXPECT_EQ(g, 0.0);

    ImageTensor ones(Shape{2, 3, 4, 2}, 1.0);
    ImageTensor zeros(Shape{2, 3, 4, 2}, 0.0);
    MseResult r1 = mse(ones, zeros);
    EXPECT_EQ(r1.loss, 1.0);
    for (double g : r1.grad.data()) EXPECT_DOUBLE_EQ(g, 2.0 / 48.0);
}

TEST(Mse, ShapeMismatchThrows) {
    EXPECT_THROW(mse(ImageTensor(Shape{1, 2, 2, 1}), ImageTensor(Shape{1, 2, 2, 3})), DataError);
}

TEST(Mse, SymmetricAndMatchesFiniteDifferences) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Shape shape{1 + rng.index(2), 1 + rng.index(4), 1 + rng.index(4), 1 + rng.index(3)};
        ImageTensor a = testing::random_image(rng, shape);
        ImageTensor b = testing::random_image(rng, shape);
        EXPECT_EQ(mse(a, b).loss, mse(b, a).loss);
        EXPECT_EQ(mse(a, a).loss, 0.0);

        MseResult r = mse(a, b);
        // Central differences are exact on a quadratic, so a large step only reduces roundoff.
        const double h = 1e-2;
        for (std::size_t i = 0; i < a.size(); ++i) {
            ImageTensor plus = a, minus = a;
            plus.data()[i] += h;
            minus.data()[i] -= h;
            const double fd = (mse(plus, b).loss - mse(minus, b).loss) / (2 * h);
            const double rel = std::abs(fd - r.grad.data()[i]) / std::max({std::abs(fd), std::abs(r.grad.data()[i]), 1e-8});
            EXPECT_LT(rel, 1e-8);
        }
    }
}

}  // namespace
}  // namespace ptl

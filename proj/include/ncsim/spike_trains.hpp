#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ncsim::engine {

/// Homogeneous Poisson process on [t_start, t_end) from the stream keyed
/// by seed.
std::vector<double> poisson_train(double rate, double t_start, double t_end,
                                  std::uint64_t seed);

/// Spikes at t_start + k / rate for every k with time < t_end.
std::vector<double> regular_train(double rate, double t_start, double t_end);

/// Row-major binary image; true marks a white pixel.
struct Bitmap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<bool> pixels;

    bool at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
    std::size_t count_white() const;

    /// Parses rows of '#'/'1' (white) and '.'/'0' (black); blank lines and
    /// lines starting with ';' are ignored.
    static Bitmap parse(const std::string& text);
};

/// The bundled 28x124 "INI" glyph.
const Bitmap& ini_glyph();

/// One train per pixel, row-major.  The stream for pixel (r, c) is derived
/// from (seed, r, c), so each train is reproducible on its own.
std::vector<std::vector<double>> image_to_trains(const Bitmap& image,
                                                 double rate_hi,
                                                 double rate_lo,
                                                 double duration,
                                                 std::uint64_t seed,
                                                 double t_start = 0.0);

std::uint64_t pixel_seed(std::uint64_t seed, std::size_t row, std::size_t col);

}  // namespace ncsim::engine

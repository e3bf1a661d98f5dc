#include "ncsim/spike_trains.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ncsim/rng.hpp"

namespace ncsim::engine {

std::vector<double> poisson_train(double rate, double t_start, double t_end,
                                  std::uint64_t seed)
{
    if (rate < 0.0) throw std::invalid_argument("poisson_train: rate < 0");
    std::vector<double> out;
    if (rate == 0.0 || t_end <= t_start) return out;
    out.reserve(static_cast<std::size_t>(rate * (t_end - t_start) * 1.2) + 4);
    rng::Stream stream(seed);
    double t = t_start;
    while (true) {
        t += stream.exponential(rate);
        if (t >= t_end) break;
        out.push_back(t);
    }
    return out;
}

std::vector<double> regular_train(double rate, double t_start, double t_end)
{
    if (!(rate > 0.0)) throw std::invalid_argument("regular_train: rate <= 0");
    std::vector<double> out;
    const double period = 1.0 / rate;
    for (std::size_t k = 0;; ++k) {
        const double t = t_start + static_cast<double>(k) * period;
        // Guard against k/rate landing a rounding error below t_end.
        if (t >= t_end || std::abs(t - t_end) < 1e-12 * std::max(1.0, t_end))
            break;
        out.push_back(t);
    }
    return out;
}

std::size_t Bitmap::count_white() const
{
    return static_cast<std::size_t>(
        std::count(pixels.begin(), pixels.end(), true));
}

Bitmap Bitmap::parse(const std::string& text)
{
    Bitmap bm;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == ';') continue;
        if (bm.cols == 0) bm.cols = line.size();
        if (line.size() != bm.cols)
            throw std::invalid_argument("bitmap: ragged row " +
                                        std::to_string(bm.rows + 1));
        for (char c : line) {
            if (c == '#' || c == '1')
                bm.pixels.push_back(true);
            else if (c == '.' || c == '0')
                bm.pixels.push_back(false);
            else
                throw std::invalid_argument(
                    std::string("bitmap: unexpected character '") + c + "'");
        }
        ++bm.rows;
    }
    if (bm.rows == 0) throw std::invalid_argument("bitmap: empty image");
    return bm;
}

std::uint64_t pixel_seed(std::uint64_t seed, std::size_t row, std::size_t col)
{
    return rng::derive_seed(seed, "pixel", row, col);
}

std::vector<std::vector<double>> image_to_trains(const Bitmap& image,
                                                 double rate_hi,
                                                 double rate_lo,
                                                 double duration,
                                                 std::uint64_t seed,
                                                 double t_start)
{
    if (rate_hi < 0.0 || rate_lo < 0.0)
        throw std::invalid_argument("image_to_trains: negative rate");
    std::vector<std::vector<double>> out;
    out.reserve(image.rows * image.cols);
    for (std::size_t r = 0; r < image.rows; ++r) {
        for (std::size_t c = 0; c < image.cols; ++c) {
            const double rate = image.at(r, c) ? rate_hi : rate_lo;
            out.push_back(poisson_train(rate, t_start, t_start + duration,
                                        pixel_seed(seed, r, c)));
        }
    }
    return out;
}

}  // namespace ncsim::engine

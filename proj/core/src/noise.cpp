#include "clockopt/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include <fftw3.h>

#include "clockopt/error.hpp"
#include "clockopt/rng.hpp"

namespace clockopt {

namespace {

// fftw planning is not thread safe; execution on distinct arrays is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

template <typename T>
struct FftwDeleter {
    void operator()(T* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwDeleter<T>>;

template <typename T>
FftwBuffer<T> fftw_buffer(std::size_t count)
{
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * count));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer<T>(p);
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

std::size_t next_pow2(std::size_t v)
{
    std::size_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

// First `length` samples of the causal convolution of `input` with `kernel`.
std::vector<double> causal_convolution(const std::vector<double>& input, const std::vector<double>& kernel)
{
    const std::size_t length = input.size();
    const std::size_t fft_size = next_pow2(2 * length);
    const std::size_t spectrum_size = fft_size / 2 + 1;

    auto real = fftw_buffer<double>(fft_size);
    auto spectrum_in = fftw_buffer<fftw_complex>(spectrum_size);
    auto spectrum_kernel = fftw_buffer<fftw_complex>(spectrum_size);

    Plan forward_in, forward_kernel, inverse;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = static_cast<int>(fft_size);
        forward_in.reset(fftw_plan_dft_r2c_1d(n, real.get(), spectrum_in.get(), FFTW_ESTIMATE));
        forward_kernel.reset(fftw_plan_dft_r2c_1d(n, real.get(), spectrum_kernel.get(), FFTW_ESTIMATE));
        inverse.reset(fftw_plan_dft_c2r_1d(n, spectrum_in.get(), real.get(), FFTW_ESTIMATE));
    }

    std::fill(real.get(), real.get() + fft_size, 0.0);
    std::copy(input.begin(), input.end(), real.get());
    fftw_execute(forward_in.get());

    std::fill(real.get(), real.get() + fft_size, 0.0);
    std::copy(kernel.begin(), kernel.begin() + static_cast<std::ptrdiff_t>(std::min(length, kernel.size())),
              real.get());
    fftw_execute(forward_kernel.get());

    for (std::size_t k = 0; k < spectrum_size; ++k) {
        const double re = spectrum_in[k][0] * spectrum_kernel[k][0] - spectrum_in[k][1] * spectrum_kernel[k][1];
        const double im = spectrum_in[k][0] * spectrum_kernel[k][1] + spectrum_in[k][1] * spectrum_kernel[k][0];
        spectrum_in[k][0] = re;
        spectrum_in[k][1] = im;
    }
    fftw_execute(inverse.get());

    std::vector<double> out(length);
    const double scale = 1.0 / static_cast<double>(fft_size);
    for (std::size_t i = 0; i < length; ++i) out[i] = real[i] * scale;
    return out;
}

}  // namespace

NoiseTrace::NoiseTrace(std::vector<double> samples, std::uint64_t seed, double cycle_period)
    : samples_(std::move(samples)), seed_(seed), cycle_period_(cycle_period)
{
    if (!(cycle_period_ > 0.0)) throw ValidationError("noise trace cycle period must be positive");
}

NoiseTrace generate_flicker(std::size_t cycles, std::uint64_t seed, const FlickerOptions& options,
                            double cycle_period)
{
    if (cycles < 2) throw ValidationError("flicker trace needs at least 2 cycles");
    if (options.oversampling < 1) throw ValidationError("flicker oversampling must be >= 1");
    if (!(options.adjacent_difference_variance > 0.0)) {
        throw ValidationError("flicker adjacent-difference variance must be positive");
    }

    const auto r = static_cast<std::size_t>(options.oversampling);
    const std::size_t fine_length = cycles * r;

    Rng rng(seed);
    std::vector<double> white(fine_length);
    for (auto& w : white) w = rng.normal();

    std::vector<double> kernel(fine_length);
    kernel[0] = 1.0;
    for (std::size_t k = 1; k < fine_length; ++k) {
        kernel[k] = kernel[k - 1] * (static_cast<double>(k) - 0.5) / static_cast<double>(k);
    }

    const std::vector<double> fine = causal_convolution(white, kernel);

    std::vector<double> samples(cycles);
    for (std::size_t c = 0; c < cycles; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < r; ++i) sum += fine[c * r + i];
        samples[c] = sum / static_cast<double>(r);
    }

    const double measured = adjacent_difference_variance(samples);
    const double scale = std::sqrt(options.adjacent_difference_variance / measured);
    for (auto& s : samples) s *= scale;
    return NoiseTrace(std::move(samples), seed, cycle_period);
}

NoiseTrace generate_white(std::size_t cycles, double sigma, std::uint64_t seed, double cycle_period)
{
    if (!(sigma >= 0.0)) throw ValidationError("white-noise sigma must be >= 0");
    Rng rng(seed);
    std::vector<double> samples(cycles);
    for (auto& s : samples) s = sigma * rng.normal();
    return NoiseTrace(std::move(samples), seed, cycle_period);
}

double adjacent_difference_variance(std::span<const double> x)
{
    if (x.size() < 2) throw InsufficientData("adjacent-difference variance needs at least 2 samples");
    long double sum = 0.0L;
    for (std::size_t k = 1; k < x.size(); ++k) {
        const long double d = static_cast<long double>(x[k]) - x[k - 1];
        sum += d * d;
    }
    return static_cast<double>(sum / static_cast<long double>(x.size() - 1));
}

double allan_deviation(std::span<const double> x, std::size_t tau)
{
    if (tau < 1) throw ValidationError("Allan deviation needs tau >= 1 cycle");
    const std::size_t m = x.size();
    if (m < 2 * tau + 1) {
        throw InsufficientData("Allan deviation at tau=" + std::to_string(tau) + " needs " +
                               std::to_string(2 * tau + 1) + " samples, have " + std::to_string(m));
    }
    std::vector<long double> prefix(m + 1, 0.0L);
    for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] + x[k];

    const std::size_t windows = m - 2 * tau + 1;
    long double sum = 0.0L;
    for (std::size_t i = 0; i < windows; ++i) {
        const long double first = prefix[i + tau] - prefix[i];
        const long double second = prefix[i + 2 * tau] - prefix[i + tau];
        const long double d = second - first;
        sum += d * d;
    }
    const long double t = static_cast<long double>(tau);
    return static_cast<double>(std::sqrt(sum / (2.0L * static_cast<long double>(windows) * t * t)));
}

AllanReport allan_report(std::span<const double> x, std::vector<std::size_t> taus)
{
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    AllanReport report;
    report.taus = taus;
    report.adev.reserve(taus.size());
    for (const auto tau : taus) report.adev.push_back(allan_deviation(x, tau));
    return report;
}

void write_trace_csv(const NoiseTrace& trace, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    for (const double v : trace.samples()) out << v << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace clockopt

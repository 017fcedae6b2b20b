#include "edp/ito.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace edp {
namespace {

static_assert(std::endian::native == std::endian::little, "trajectory container assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'E', 'D', 'P', 'T', 'R', 'A', 'J', '1'};

template <typename T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("trajectory container truncated");
    return value;
}

void put_array(std::ostream& os, std::span<const double> data) {
    os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
}

void get_array(std::istream& is, std::span<double> data) {
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    if (!is) throw std::runtime_error("trajectory container truncated");
}

}  // namespace

void write_trajectory(const std::filesystem::path& path, const TrajectoryEnsemble& traj) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::filesystem::filesystem_error("cannot open for writing", path, std::make_error_code(std::errc::io_error));
    os.write(kMagic.data(), kMagic.size());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.dim()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.noise_dim()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.steps()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(traj.paths()));
    put<double>(os, traj.grid().horizon);
    put<std::uint64_t>(os, traj.noise().seed());
    put_array(os, traj.initial_data());
    put_array(os, traj.rate_data());
    put_array(os, traj.coeff_data());
    put_array(os, traj.noise().data());
    put_array(os, traj.state_data());
    if (!os) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

TrajectoryEnsemble read_trajectory(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::filesystem::filesystem_error("cannot open for reading", path, std::make_error_code(std::errc::io_error));
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    if (!is || magic != kMagic) throw std::runtime_error("not a trajectory container");
    const auto n = get<std::uint64_t>(is);
    const auto m = get<std::uint64_t>(is);
    const auto steps = get<std::uint64_t>(is);
    const auto paths = get<std::uint64_t>(is);
    const auto horizon = get<double>(is);
    const auto seed = get<std::uint64_t>(is);
    if (n == 0 || m == 0 || steps == 0 || paths == 0 || (n * m * steps * paths) > (std::uint64_t{1} << 34))
        throw std::runtime_error("trajectory container header is out of range");

    const TimeGrid grid(horizon, static_cast<int>(steps));
    std::vector<double> u0s(paths * n), rates(paths * steps * n), coeffs(paths * steps * n * m),
        increments(paths * steps * m), states(paths * (steps + 1) * n);
    get_array(is, u0s);
    get_array(is, rates);
    get_array(is, coeffs);
    get_array(is, increments);
    get_array(is, states);
    auto noise = std::make_shared<const NoiseEnsemble>(NoiseEnsemble::from_increments(
        static_cast<int>(m), grid, static_cast<int>(paths), seed, std::move(increments)));
    return make_trajectory(u0s, rates, coeffs, std::move(noise), grid);
}

}  // namespace edp

#include "sctl/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace sctl {

namespace {

constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
void put_f64(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("io: cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path, const char* magic) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("io: cannot open for reading: " + path);
    char m[4];
    is.read(m, 4);
    if (!is || std::memcmp(m, magic, 4) != 0) throw InputError("io: bad magic in " + path);
    if (get_u32(is) != kVersion) throw InputError("io: unsupported version in " + path);
    return is;
}

void write_grid_payload(std::ostream& os, std::uint32_t d, std::uint32_t nx, std::uint32_t nv,
                        double xext, double vext) {
    os.write("SCTL", 4);
    put_u32(os, kVersion);
    put_u32(os, d);
    put_u32(os, nx);
    put_u32(os, nv);
    put_f64(os, xext);
    put_f64(os, vext);
}

}  // namespace

void write_phase_field(const std::string& path, const PhaseField& f) {
    auto os = open_out(path);
    write_grid_payload(os, static_cast<std::uint32_t>(f.grid.dim), f.grid.nx(), f.grid.nv,
                       f.grid.space.x_extent, f.grid.v_extent);
    for (int a = 0; a < f.grid.nx(); ++a)
        for (int j = 0; j < f.grid.nv; ++j) put_f64(os, f.values(a, j));
}

PhaseField read_phase_field(const std::string& path) {
    auto is = open_in(path, "SCTL");
    const int d = static_cast<int>(get_u32(is));
    const int nx = static_cast<int>(get_u32(is));
    const int nv = static_cast<int>(get_u32(is));
    const double xext = get_f64(is);
    const double vext = get_f64(is);
    PhaseGrid grid(SpatialGrid(nx, xext), nv, vext, d);
    Eigen::ArrayXXd values(nx, nv);
    for (int a = 0; a < nx; ++a)
        for (int j = 0; j < nv; ++j) values(a, j) = get_f64(is);
    if (!is) throw InputError("io: truncated file " + path);
    const double m = field_mass(grid, values);
    if ((values >= -1e-14).all() && std::abs(m - 1.0) <= 1e-12)
        return make_probability_field(grid, std::move(values));
    return make_wigner_field(grid, std::move(values));
}

void write_spatial_density(const std::string& path, const SpatialDensity& rho) {
    auto os = open_out(path);
    write_grid_payload(os, 1, rho.grid.nx, 1, rho.grid.x_extent, 0.0);
    for (int a = 0; a < rho.grid.nx; ++a) put_f64(os, rho.values[a]);
}

SpatialDensity read_spatial_density(const std::string& path) {
    auto is = open_in(path, "SCTL");
    (void)get_u32(is);  // d
    const int nx = static_cast<int>(get_u32(is));
    const int nv = static_cast<int>(get_u32(is));
    if (nv != 1) throw InputError("io: not a spatial density: " + path);
    const double xext = get_f64(is);
    (void)get_f64(is);
    SpatialGrid grid(nx, xext);
    Eigen::ArrayXd values(nx);
    for (int a = 0; a < nx; ++a) values[a] = get_f64(is);
    if (!is) throw InputError("io: truncated file " + path);
    return make_spatial_density(grid, std::move(values));
}

void write_mixed_state(const std::string& path, const MixedState& op) {
    auto os = open_out(path);
    os.write("SCTM", 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(op.space.nx));
    put_u32(os, static_cast<std::uint32_t>(op.rank()));
    put_f64(os, op.space.x_extent);
    put_f64(os, op.hbar);
    for (int m = 0; m < op.rank(); ++m) put_f64(os, op.weights[m]);
    for (int m = 0; m < op.rank(); ++m)
        for (int a = 0; a < op.space.nx; ++a) {
            put_f64(os, op.vectors(a, m).real());
            put_f64(os, op.vectors(a, m).imag());
        }
}

MixedState read_mixed_state(const std::string& path) {
    auto is = open_in(path, "SCTM");
    const int nx = static_cast<int>(get_u32(is));
    const int rank = static_cast<int>(get_u32(is));
    const double xext = get_f64(is);
    const double hbar = get_f64(is);
    Eigen::VectorXd w(rank);
    for (int m = 0; m < rank; ++m) w[m] = get_f64(is);
    Eigen::MatrixXcd v(nx, rank);
    for (int m = 0; m < rank; ++m)
        for (int a = 0; a < nx; ++a) {
            const double re = get_f64(is);
            const double im = get_f64(is);
            v(a, m) = Complex(re, im);
        }
    if (!is) throw InputError("io: truncated file " + path);
    return make_mixed_state(hbar, SpatialGrid(nx, xext), std::move(w), std::move(v));
}

void export_csv(const std::string& path, const PhaseField& f) {
    std::ofstream os(path);
    if (!os) throw InputError("io: cannot open for writing: " + path);
    os.precision(17);
    os << "x,v,value\n";
    for (int a = 0; a < f.grid.nx(); ++a)
        for (int j = 0; j < f.grid.nv; ++j)
            os << f.grid.x(a) << ',' << f.grid.v(j) << ',' << f.values(a, j) << '\n';
}

void export_csv(const std::string& path, const SpatialDensity& rho) {
    std::ofstream os(path);
    if (!os) throw InputError("io: cannot open for writing: " + path);
    os.precision(17);
    os << "x,value\n";
    for (int a = 0; a < rho.grid.nx; ++a) os << rho.grid.x(a) << ',' << rho.values[a] << '\n';
}

}  // namespace sctl

#pragma once

#include <string>

#include "sctl/state.hpp"

namespace sctl {

// Little-endian binary container for grid data.  Header: magic "SCTL",
// version u32, d u32, nx u32, nv u32, x_extent f64, v_extent f64; payload is
// row-major f64 values (nx rows, nv cols; spatial data uses nv = 1,
// v_extent = 0).  Mixed states use magic "SCTM": version u32, nx u32,
// rank u32, x_extent f64, hbar f64, weights f64[rank], then the vectors as
// interleaved (re, im) f64 pairs, vector by vector.
void write_phase_field(const std::string& path, const PhaseField& f);
PhaseField read_phase_field(const std::string& path);

void write_spatial_density(const std::string& path, const SpatialDensity& rho);
SpatialDensity read_spatial_density(const std::string& path);

void write_mixed_state(const std::string& path, const MixedState& op);
MixedState read_mixed_state(const std::string& path);

// Plain-text export: "x,v,value" rows for fields, "x,value" for densities.
void export_csv(const std::string& path, const PhaseField& f);
void export_csv(const std::string& path, const SpatialDensity& rho);

}  // namespace sctl

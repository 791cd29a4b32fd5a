#pragma once

#include <string>

#include "buckloop/model.hpp"
#include "buckloop/sim.hpp"

namespace buckloop {

// Header: f_hz,mag_db,phase_deg,re,im,quantity_name. Values are written with
// %.17g so a read/write round trip is bit-exact. Phase is unwrapped along the
// curve with the first point in (-180, 180]. Files are written atomically
// (temp file plus rename).
void write_bode_csv(const std::string& path, const BodeCurve& curve);
BodeCurve read_bode_csv(const std::string& path);

// Header: t_s,i_L_A,v_o_V,q,cmp_active,sample_flag,sample_value.
void write_waveform_csv(const std::string& path, const Waveform& wf);

void write_text_atomic(const std::string& path, const std::string& content);

std::string format_g17(double v);

}  // namespace buckloop

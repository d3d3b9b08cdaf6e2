#pragma once

#include <string>

#include "revbend/capseg.hpp"
#include "revbend/modesolve.hpp"
#include "revbend/profile.hpp"

namespace revbend {

// Plain-text profile file: header `revbend-profile v1`, then `r:` and `h:`
// lines of Fourier amplitudes (a0 a1 b1 a2 b2 ...). Decimal round trips are
// bit exact. A trailing `checksum:` line is verified when present; a
// mismatch warns on stderr but does not fail the parse.
ProfileCurve load_profile(const std::string& path);
void save_profile(const ProfileCurve& curve, const std::string& path);

// Plain-text cap-segment file: header `revbend-capseg v1`, `box:` line,
// one `cap:` line per cap, one `seg:` block per segment with `piece:`
// lines (Chebyshev or parametric pocket window) and an optional `pocket:`
// sub-line. Round trips bit exactly.
CapSegmentProfile load_capseg(const std::string& path);
void save_capseg(const CapSegmentProfile& profile, const std::string& path);

// Mode solution dump: per-cap series coefficients, per-segment dense
// samples as `z,psi,dpsi,phase` CSV blocks, pocket t_hat values and the
// closure defect line.
void save_mode_dump(const ModeSolution& mode, const std::string& path);

// Field samples CSV, header `s,t,a,b,c,Zx,Zy,Zz`.
void save_field_csv(const DeformationField& field, const std::string& path);

// Exact decimal formatting used by every writer (%.17g).
std::string format_double(double v);

}  // namespace revbend

#include "revbend/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

namespace revbend {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line,
                             const std::string& what) {
  fail(ErrorCode::ParseError,
       path + ":" + std::to_string(line) + ": " + what);
}

std::vector<double> parse_numbers(const std::string& text,
                                  const std::string& path, int line) {
  std::vector<double> out;
  const char* p = text.c_str();
  while (*p) {
    while (*p == ' ' || *p == '\t') ++p;
    if (!*p) break;
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) parse_fail(path, line, "expected a number near '" +
                                             std::string(p).substr(0, 8) + "'");
    out.push_back(v);
    p = end;
  }
  return out;
}

// FNV-1a over the payload lines; used for the optional checksum warning.
std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;
  std::string payload;  // accumulated for the checksum

  explicit LineReader(const std::string& p) : in(p), path(p) {
    if (!in) fail(ErrorCode::IOError, "cannot open " + p);
  }
  bool next(std::string* out) {
    std::string raw;
    if (!std::getline(in, raw)) return false;
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    *out = raw;
    return true;
  }
};

bool starts_with(const std::string& s, const char* key, std::string* rest) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  const std::size_t n = std::strlen(key);
  if (s.compare(i, n, key) != 0) return false;
  *rest = s.substr(i + n);
  return true;
}

void check_checksum(LineReader& r, const std::string& maybe_line) {
  std::string rest;
  if (!starts_with(maybe_line, "checksum:", &rest)) return;
  const std::uint64_t want = std::strtoull(rest.c_str(), nullptr, 16);
  const std::uint64_t got = fnv1a(r.payload);
  if (want != got)
    std::cerr << "warning: " << r.path
              << ": checksum mismatch (file edited by hand?)\n";
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ProfileCurve load_profile(const std::string& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(&line) || line.find("revbend-profile v1") == std::string::npos)
    parse_fail(path, 1, "missing 'revbend-profile v1' header");

  std::vector<double> rc, hc;
  bool have_r = false, have_h = false;
  while (r.next(&line)) {
    std::string rest;
    if (starts_with(line, "checksum:", &rest)) {
      check_checksum(r, line);
      continue;
    }
    if (starts_with(line, "r:", &rest)) {
      rc = parse_numbers(rest, path, r.line_no);
      have_r = true;
      r.payload += "r " + rest + "\n";
    } else if (starts_with(line, "h:", &rest)) {
      hc = parse_numbers(rest, path, r.line_no);
      have_h = true;
      r.payload += "h " + rest + "\n";
    } else if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    } else {
      parse_fail(path, r.line_no, "unrecognized line");
    }
  }
  if (!have_r || !have_h)
    parse_fail(path, r.line_no, "file must contain r: and h: lines");
  return ProfileCurve(FourierSeries(rc), FourierSeries(hc));
}

void save_profile(const ProfileCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  out << "revbend-profile v1\n";
  std::string payload;
  auto put = [&](const char* key, const std::vector<double>& packed) {
    std::string linebody;
    for (std::size_t i = 0; i < packed.size(); ++i) {
      linebody += (i ? " " : " ") + format_double(packed[i]);
    }
    out << key << linebody << "\n";
    payload += std::string(1, key[0]) + linebody + "\n";
  };
  put("r:", curve.r().packed());
  put("h:", curve.h().packed());
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a(payload));
  out << "checksum: " << buf << "\n";
}

void save_capseg(const CapSegmentProfile& profile, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  out << "revbend-capseg v1\n";
  auto d = [&](double v) { return format_double(v); };
  out << "box: " << d(profile.box.x_min) << " " << d(profile.box.x_max) << " "
      << d(profile.box.z_min) << " " << d(profile.box.z_max) << "\n";
  for (const auto& cap : profile.caps)
    out << "cap: " << d(cap.x0) << " " << d(cap.z0) << " " << d(cap.K) << " "
        << d(cap.delta1) << " " << cap.index_sign << "\n";
  for (const auto& sg : profile.segments) {
    out << "seg: " << d(sg.z1) << " " << d(sg.z2) << " "
        << (sg.ascending ? 1 : 0) << " " << sg.cap_lo << " " << sg.cap_hi
        << " " << sg.side_lo << " " << sg.side_hi << " " << d(sg.zwin_lo)
        << " " << d(sg.zwin_hi) << " " << sg.degree << " "
        << sg.pieces.size() << "\n";
    for (const auto& piece : sg.pieces) {
      if (piece.is_pocket_window) {
        out << "piece: window " << d(piece.zlo) << " " << d(piece.zhi) << " "
            << d(piece.base.center) << " " << piece.base.coeffs.size();
        for (double cc : piece.base.coeffs) out << " " << d(cc);
        out << " " << piece.delta.coeffs.size();
        for (double cc : piece.delta.coeffs) out << " " << d(cc);
        out << "\n";
      } else {
        out << "piece: cheb " << d(piece.zlo) << " " << d(piece.zhi) << " "
            << piece.cheb.coeffs().size();
        for (double cc : piece.cheb.coeffs()) out << " " << d(cc);
        out << "\n";
      }
    }
    if (sg.pocket) {
      const PocketSpec& pk = *sg.pocket;
      out << "pocket: " << d(pk.z0) << " " << d(pk.delta2) << " " << d(pk.t)
          << " " << d(pk.amp) << " " << pk.f0.coeffs.size();
      for (double cc : pk.f0.coeffs) out << " " << d(cc);
      out << " " << pk.f1.coeffs.size();
      for (double cc : pk.f1.coeffs) out << " " << d(cc);
      out << "\n";
    }
  }
  for (const auto& st : profile.provenance) {
    out << "step: " << static_cast<int>(st.kind) << " " << d(st.theta) << " "
        << st.cap_index << " " << st.seg_index << " " << d(st.support.x_min)
        << " " << d(st.support.x_max) << " " << d(st.support.z_min) << " "
        << d(st.support.z_max) << " " << d(st.max_displacement) << " "
        << (st.admissible ? 1 : 0) << "\n";
  }
}

CapSegmentProfile load_capseg(const std::string& path) {
  LineReader r(path);
  std::string line;
  if (!r.next(&line) || line.find("revbend-capseg v1") == std::string::npos)
    parse_fail(path, 1, "missing 'revbend-capseg v1' header");

  CapSegmentProfile p;
  Segment* cur_seg = nullptr;
  std::size_t pieces_expected = 0;
  while (r.next(&line)) {
    std::string rest;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (starts_with(line, "box:", &rest)) {
      const auto v = parse_numbers(rest, path, r.line_no);
      if (v.size() != 4) parse_fail(path, r.line_no, "box needs 4 numbers");
      p.box = {v[0], v[1], v[2], v[3]};
    } else if (starts_with(line, "cap:", &rest)) {
      const auto v = parse_numbers(rest, path, r.line_no);
      if (v.size() != 5) parse_fail(path, r.line_no, "cap needs 5 numbers");
      Cap cap;
      cap.x0 = v[0];
      cap.z0 = v[1];
      cap.K = v[2];
      cap.delta1 = v[3];
      cap.index_sign = static_cast<int>(v[4]);
      p.caps.push_back(cap);
    } else if (starts_with(line, "seg:", &rest)) {
      const auto v = parse_numbers(rest, path, r.line_no);
      if (v.size() != 11) parse_fail(path, r.line_no, "seg needs 11 numbers");
      Segment sg;
      sg.z1 = v[0];
      sg.z2 = v[1];
      sg.ascending = v[2] != 0.0;
      sg.cap_lo = static_cast<int>(v[3]);
      sg.cap_hi = static_cast<int>(v[4]);
      sg.side_lo = static_cast<int>(v[5]);
      sg.side_hi = static_cast<int>(v[6]);
      sg.zwin_lo = v[7];
      sg.zwin_hi = v[8];
      sg.degree = static_cast<int>(v[9]);
      pieces_expected = static_cast<std::size_t>(v[10]);
      p.segments.push_back(std::move(sg));
      cur_seg = &p.segments.back();
    } else if (starts_with(line, "piece:", &rest)) {
      if (!cur_seg) parse_fail(path, r.line_no, "piece before seg");
      std::istringstream ss(rest);
      std::string kind;
      ss >> kind;
      std::string tail;
      std::getline(ss, tail);
      const auto v = parse_numbers(tail, path, r.line_no);
      SegmentPiece piece;
      if (kind == "cheb") {
        if (v.size() < 3) parse_fail(path, r.line_no, "short cheb piece");
        piece.zlo = v[0];
        piece.zhi = v[1];
        const std::size_t n = static_cast<std::size_t>(v[2]);
        if (v.size() != 3 + n)
          parse_fail(path, r.line_no, "cheb coefficient count mismatch");
        piece.set_cheb(ChebSeries(
            piece.zlo, piece.zhi,
            std::vector<double>(v.begin() + 3, v.end())));
      } else if (kind == "window") {
        if (v.size() < 4) parse_fail(path, r.line_no, "short window piece");
        piece.zlo = v[0];
        piece.zhi = v[1];
        piece.is_pocket_window = true;
        piece.base.center = v[2];
        piece.delta.center = v[2];
        std::size_t at = 3;
        const std::size_t nb = static_cast<std::size_t>(v[at++]);
        if (v.size() < at + nb + 1)
          parse_fail(path, r.line_no, "window base count mismatch");
        piece.base.coeffs.assign(v.begin() + at, v.begin() + at + nb);
        at += nb;
        const std::size_t nd = static_cast<std::size_t>(v[at++]);
        if (v.size() != at + nd)
          parse_fail(path, r.line_no, "window delta count mismatch");
        piece.delta.coeffs.assign(v.begin() + at, v.begin() + at + nd);
      } else {
        parse_fail(path, r.line_no, "unknown piece kind '" + kind + "'");
      }
      if (cur_seg->pieces.size() >= pieces_expected)
        parse_fail(path, r.line_no, "more pieces than declared");
      cur_seg->pieces.push_back(std::move(piece));
    } else if (starts_with(line, "pocket:", &rest)) {
      if (!cur_seg) parse_fail(path, r.line_no, "pocket before seg");
      const auto v = parse_numbers(rest, path, r.line_no);
      if (v.size() < 5) parse_fail(path, r.line_no, "short pocket line");
      PocketSpec pk;
      pk.z0 = v[0];
      pk.delta2 = v[1];
      pk.t = v[2];
      pk.amp = v[3];
      std::size_t at = 4;
      const std::size_t n0 = static_cast<std::size_t>(v[at++]);
      if (v.size() < at + n0 + 1)
        parse_fail(path, r.line_no, "pocket f0 count mismatch");
      pk.f0.center = pk.z0;
      pk.f0.coeffs.assign(v.begin() + at, v.begin() + at + n0);
      at += n0;
      const std::size_t n1 = static_cast<std::size_t>(v[at++]);
      if (v.size() != at + n1)
        parse_fail(path, r.line_no, "pocket f1 count mismatch");
      pk.f1.center = pk.z0;
      pk.f1.coeffs.assign(v.begin() + at, v.begin() + at + n1);
      cur_seg->pocket = std::move(pk);
    } else if (starts_with(line, "step:", &rest)) {
      const auto v = parse_numbers(rest, path, r.line_no);
      if (v.size() != 10) parse_fail(path, r.line_no, "step needs 10 numbers");
      PerturbationStep st;
      st.kind = static_cast<PerturbationStep::Kind>(static_cast<int>(v[0]));
      st.theta = v[1];
      st.cap_index = static_cast<int>(v[2]);
      st.seg_index = static_cast<int>(v[3]);
      st.support = {v[4], v[5], v[6], v[7]};
      st.max_displacement = v[8];
      st.admissible = v[9] != 0.0;
      p.provenance.push_back(st);
    } else {
      parse_fail(path, r.line_no, "unrecognized line");
    }
  }
  if (p.caps.empty() || p.segments.empty())
    parse_fail(path, r.line_no, "file has no caps or segments");
  p.build_parametrization();
  return p;
}

void save_mode_dump(const ModeSolution& mode, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  auto d = [&](double v) { return format_double(v); };
  out << "revbend-mode v1\n";
  out << "k = " << mode.k << "\n";
  for (std::size_t i = 0; i < mode.cap_series.size(); ++i) {
    const auto& s = mode.cap_series[i];
    out << "cap " << i << " series: exponent " << s.exponent << " x0 "
        << d(s.x0) << " scale " << d(mode.cap_scale[i]) << " coeffs";
    for (double cc : s.coeffs) out << " " << d(cc);
    out << "\n";
  }
  for (std::size_t i = 0; i < mode.segments.size(); ++i) {
    const auto& sol = mode.segments[i];
    const auto& shot = mode.pockets[i];
    out << "segment " << i << " pocket: t_hat " << d(shot.t_hat) << " amp "
        << d(mode.profile.segments[i].pocket ? mode.profile.segments[i].pocket->amp
                                             : 1.0)
        << " residual " << d(shot.residual) << " count_jump "
        << shot.count_jump << " k_min " << shot.k_min << "\n";
    out << "segment " << i << " samples:\n";
    out << "z,psi,dpsi,phase\n";
    for (const auto& smp : sol.run.samples)
      out << d(smp.z) << "," << d(smp.u) << "," << d(smp.v) << ","
          << d(smp.theta) << "\n";
  }
  out << "closure: sigma " << d(mode.closure_sigma) << " psi2_defect "
      << d(mode.closure_defect_psi2) << " psi3_jump "
      << d(mode.closure_defect_psi3) << " amp " << d(mode.closure_amp)
      << "\n";
}

void save_field_csv(const DeformationField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  auto d = [&](double v) { return format_double(v); };
  out << "s,t,a,b,c,Zx,Zy,Zz\n";
  for (int is = 0; is < field.n_s; ++is)
    for (int it = 0; it < field.n_t; ++it) {
      const std::size_t id = field.idx(is, it);
      out << d(field.s[is]) << "," << d(field.t[it]) << "," << d(field.a[id])
          << "," << d(field.b[id]) << "," << d(field.c[id]) << ","
          << d(field.Z[id].x) << "," << d(field.Z[id].y) << ","
          << d(field.Z[id].z) << "\n";
    }
}

}  // namespace revbend

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "iondetect/ccd.hpp"
#include "iondetect/detmodel.hpp"
#include "iondetect/fidelity.hpp"
#include "iondetect/fitkit.hpp"

namespace iondetect {

/// 9 significant digits, the fixed precision of every emitted table.
std::string format_number(double value);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// `# trials=<N> seed=<S> mode=<M>` then `n,count`, one row per occupied bin.
std::string histogram_to_csv(const PhotonHistogram& h);
/// Accepts the format above; metadata line optional. A histogram with a
/// trials entry parses as simulated, otherwise measured.
PhotonHistogram histogram_from_csv(const std::string& text);

/// `n,p_dark,p_bright`.
std::string distributions_to_csv(const std::vector<double>& dark, const std::vector<double>& bright);

/// `eta,infidelity_numeric,infidelity_approx,lambda0_opt,d_opt`.
std::string curve_to_csv(const std::vector<CurveRow>& rows);

/// `species,eta,fidelity,dark_fidelity,bright_fidelity,lambda0_opt,d_opt`.
std::string fidelity_table_to_csv(const std::vector<Table1Row>& rows);

/// `trial,ion,roi_sum,bit`.
std::string readouts_to_csv(const std::vector<RegisterReadout>& readouts);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples) with one comment
/// line carrying the CCD metadata and seed.
std::string frame_to_pgm(const CcdFrame& frame);
CcdFrame frame_from_pgm(const std::string& bytes);

/// `key: value` lines.
std::string fit_result_to_text(const FitResult& fit);

/// `state,n,observed,expected,residual`.
std::string model_rows_to_csv(const std::vector<ModelRow>& rows);

}  // namespace iondetect

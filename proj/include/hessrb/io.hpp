#pragma once

#include "hessrb/gevp.hpp"
#include "hessrb/rom.hpp"

#include <filesystem>
#include <string>

namespace hessrb {

// All text formats use decimal values with 17 significant digits so doubles
// round-trip exactly.

void write_matrix_text(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_text(const std::filesystem::path& path);

/// Header "K L", then one line per pair: lambda followed by the K entries.
void write_eigenpairs(const std::filesystem::path& path, const GeneralizedEigenPairs<double>& pairs);
GeneralizedEigenPairs<double> read_eigenpairs(const std::filesystem::path& path);

/// Header "K N", then one parameter vector per line.
void write_parameter_set(const std::filesystem::path& path, const std::vector<Vector>& params);
std::vector<Vector> read_parameter_set(const std::filesystem::path& path);

/// Model directory: meta.txt plus one text matrix per stored block.
void save_model(const std::filesystem::path& dir, const ReducedModel& model);
ReducedModel load_model(const std::filesystem::path& dir, ProblemPtr problem);

std::string format_double(double v);  // %.17g

}  // namespace hessrb

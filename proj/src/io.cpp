#include "hessrb/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace hessrb {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

void write_row(std::ofstream& out, const Vector& row) {
  for (Index j = 0; j < row.size(); ++j) {
    if (j) out << ' ';
    out << format_double(row[j]);
  }
  out << '\n';
}

}  // namespace

void write_matrix_text(const fs::path& path, const Matrix& m) {
  auto out = open_out(path);
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

Matrix read_matrix_text(const fs::path& path) {
  auto in = open_in(path);
  Index rows = 0, cols = 0;
  in >> rows >> cols;
  if (!in || rows < 0 || cols < 0) throw std::runtime_error("bad matrix header in " + path.string());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(in >> m(i, j))) throw std::runtime_error("truncated matrix in " + path.string());
  return m;
}

void write_eigenpairs(const fs::path& path, const GeneralizedEigenPairs<double>& pairs) {
  auto out = open_out(path);
  out << pairs.eigenvectors.rows() << ' ' << pairs.count() << '\n';
  for (Index k = 0; k < pairs.count(); ++k) {
    out << format_double(pairs.eigenvalues[k]);
    for (Index i = 0; i < pairs.eigenvectors.rows(); ++i)
      out << ' ' << format_double(pairs.eigenvectors(i, k));
    out << '\n';
  }
}

GeneralizedEigenPairs<double> read_eigenpairs(const fs::path& path) {
  auto in = open_in(path);
  Index k_dim = 0, l = 0;
  in >> k_dim >> l;
  if (!in || k_dim < 1 || l < 0) throw std::runtime_error("bad eigenpair header in " + path.string());
  GeneralizedEigenPairs<double> pairs;
  pairs.eigenvalues.resize(l);
  pairs.eigenvectors.resize(k_dim, l);
  for (Index k = 0; k < l; ++k) {
    if (!(in >> pairs.eigenvalues[k])) throw std::runtime_error("truncated eigenpairs in " + path.string());
    for (Index i = 0; i < k_dim; ++i)
      if (!(in >> pairs.eigenvectors(i, k)))
        throw std::runtime_error("truncated eigenpairs in " + path.string());
  }
  return pairs;
}

void write_parameter_set(const fs::path& path, const std::vector<Vector>& params) {
  auto out = open_out(path);
  const Index k = params.empty() ? 0 : params[0].size();
  out << k << ' ' << params.size() << '\n';
  for (const Vector& p : params) write_row(out, p);
}

std::vector<Vector> read_parameter_set(const fs::path& path) {
  auto in = open_in(path);
  Index k = 0, n = 0;
  in >> k >> n;
  if (!in || k < 0 || n < 0) throw std::runtime_error("bad parameter-set header in " + path.string());
  std::vector<Vector> params(n, Vector(k));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < k; ++j)
      if (!(in >> params[i][j])) throw std::runtime_error("truncated parameter set in " + path.string());
  return params;
}

namespace {

Vector vector_from_matrix(const Matrix& m) {
  if (m.cols() != 1) throw std::runtime_error("expected a column vector");
  return m.col(0);
}

/// Full-length basis (zeros at constrained dofs) for serialization.
Matrix widen_basis(const ParametricProblem& problem, const Matrix& interior_basis) {
  Matrix full = Matrix::Zero(problem.mesh->n_vertices(), interior_basis.cols());
  for (size_t i = 0; i < problem.dofs.interior.size(); ++i)
    full.row(problem.dofs.interior[i]) = interior_basis.row(static_cast<Index>(i));
  return full;
}

Matrix narrow_basis(const ParametricProblem& problem, const Matrix& full_basis) {
  Matrix interior(static_cast<Index>(problem.dofs.interior.size()), full_basis.cols());
  for (size_t i = 0; i < problem.dofs.interior.size(); ++i)
    interior.row(static_cast<Index>(i)) = full_basis.row(problem.dofs.interior[i]);
  return interior;
}

}  // namespace

void save_model(const fs::path& dir, const ReducedModel& model) {
  fs::create_directories(dir);
  const ParametricProblem& problem = *model.problem;

  auto meta = open_out(dir / "meta.txt");
  meta << "format = hessrb-rom-1\n";
  meta << "N = " << model.rank() << '\n';
  meta << "dual_N = " << model.dual_rank() << '\n';
  meta << "Q_a = " << model.op_blocks.size() << '\n';
  meta << "Q_f = " << model.rhs_blocks.size() << '\n';
  meta << "epsilon = " << format_double(model.epsilon) << '\n';
  meta << "norm = " << (model.norm == NormKind::energy ? "V" : "l2") << '\n';
  meta << "lift_qoi = " << format_double(model.lift_qoi) << '\n';
  meta << "K = " << problem.n_params << '\n';
  meta << "N_h = " << problem.mesh->n_vertices() << '\n';
  meta << "selected =";
  for (Index i : model.selected) meta << ' ' << i;
  meta << '\n';

  write_matrix_text(dir / "basis.txt", widen_basis(problem, model.basis));
  if (model.has_dual()) write_matrix_text(dir / "dual_basis.txt", widen_basis(problem, model.dual_basis));
  if (model.singular_values.size() > 0)
    write_matrix_text(dir / "singular_values.txt", model.singular_values);
  write_matrix_text(dir / "qoi_block.txt", model.qoi_block);
  for (size_t q = 0; q < model.op_blocks.size(); ++q)
    write_matrix_text(dir / ("op_block_" + std::to_string(q) + ".txt"), model.op_blocks[q]);
  for (size_t q = 0; q < model.rhs_blocks.size(); ++q)
    write_matrix_text(dir / ("rhs_block_" + std::to_string(q) + ".txt"), model.rhs_blocks[q]);
  for (size_t q = 0; q < model.dual_op_blocks.size(); ++q)
    write_matrix_text(dir / ("dual_op_block_" + std::to_string(q) + ".txt"), model.dual_op_blocks[q]);
  for (size_t q = 0; q < model.cross_blocks.size(); ++q)
    write_matrix_text(dir / ("cross_block_" + std::to_string(q) + ".txt"), model.cross_blocks[q]);
  for (size_t q = 0; q < model.dual_rhs_blocks.size(); ++q)
    write_matrix_text(dir / ("dual_rhs_block_" + std::to_string(q) + ".txt"), model.dual_rhs_blocks[q]);
  if (model.dual_qoi_block.size() > 0) write_matrix_text(dir / "dual_qoi_block.txt", model.dual_qoi_block);
}

ReducedModel load_model(const fs::path& dir, ProblemPtr problem) {
  auto meta_in = open_in(dir / "meta.txt");
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(meta_in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t") + 1);
    };
    trim(key);
    trim(value);
    meta[key] = value;
  }
  if (meta["format"] != "hessrb-rom-1") throw std::runtime_error("unknown model format in " + dir.string());
  if (std::stoll(meta["K"]) != problem->n_params || std::stoll(meta["N_h"]) != problem->mesh->n_vertices())
    throw std::runtime_error("model dimensions do not match the problem");

  ReducedModel model;
  model.problem = problem;
  model.norm = meta["norm"] == "l2" ? NormKind::l2 : NormKind::energy;
  model.epsilon = std::stod(meta["epsilon"]);
  model.lift_qoi = std::stod(meta["lift_qoi"]);
  {
    std::istringstream sel(meta["selected"]);
    Index idx;
    while (sel >> idx) model.selected.push_back(idx);
  }

  model.basis = narrow_basis(*problem, read_matrix_text(dir / "basis.txt"));
  if (fs::exists(dir / "dual_basis.txt"))
    model.dual_basis = narrow_basis(*problem, read_matrix_text(dir / "dual_basis.txt"));
  else
    model.dual_basis.resize(model.basis.rows(), 0);
  if (fs::exists(dir / "singular_values.txt"))
    model.singular_values = vector_from_matrix(read_matrix_text(dir / "singular_values.txt"));
  model.qoi_block = vector_from_matrix(read_matrix_text(dir / "qoi_block.txt"));

  const auto q_a = std::stoul(meta["Q_a"]);
  const auto q_f = std::stoul(meta["Q_f"]);
  for (size_t q = 0; q < q_a; ++q)
    model.op_blocks.push_back(read_matrix_text(dir / ("op_block_" + std::to_string(q) + ".txt")));
  for (size_t q = 0; q < q_f; ++q)
    model.rhs_blocks.push_back(
        vector_from_matrix(read_matrix_text(dir / ("rhs_block_" + std::to_string(q) + ".txt"))));
  if (fs::exists(dir / "dual_qoi_block.txt")) {
    for (size_t q = 0; q < q_a; ++q) {
      model.dual_op_blocks.push_back(
          read_matrix_text(dir / ("dual_op_block_" + std::to_string(q) + ".txt")));
      model.cross_blocks.push_back(read_matrix_text(dir / ("cross_block_" + std::to_string(q) + ".txt")));
    }
    for (size_t q = 0; q < q_f; ++q)
      model.dual_rhs_blocks.push_back(
          vector_from_matrix(read_matrix_text(dir / ("dual_rhs_block_" + std::to_string(q) + ".txt"))));
    model.dual_qoi_block = vector_from_matrix(read_matrix_text(dir / "dual_qoi_block.txt"));
  }
  return model;
}

}  // namespace hessrb

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "gdm/dataset.hpp"
#include "gdm/solver.hpp"
#include "oracles.hpp"

namespace gdm {
namespace {

Matrix random_orthogonal(Index n, std::uint64_t seed) {
  Eigen::HouseholderQR<Matrix> qr(oracle::random_matrix(n, n, seed));
  return qr.householderQ() * Matrix::Identity(n, n);
}

GramMatrix with_spectrum(const std::vector<double>& values, std::uint64_t seed) {
  const auto n = static_cast<Index>(values.size());
  const Matrix q = random_orthogonal(n, seed);
  const Vector d = Eigen::Map<const Vector>(values.data(), n);
  const Matrix k = q * d.asDiagonal() * q.transpose();
  return {0.5 * (k + k.transpose()), true};
}

MultiSubjectDataset synth(Index m, Index v, Index t, Index latent, double sigma, std::uint64_t seed, Index classes = 4) {
  SynthParams p;
  p.subjects = m;
  p.voxels = v;
  p.samples = t;
  p.latent = latent;
  p.categories = classes;
  p.sigma = sigma;
  p.seed = seed;
  return synth_dataset(p).first;
}

Matrix sum_of_outer_products(const AlignmentModel& model) {
  Matrix total = Matrix::Zero(model.k, model.k);
  for (std::size_t i = 0; i < model.subjects.size(); ++i) {
    const Matrix y = model.training_responses(i);
    total += y * y.transpose();
  }
  return total;
}

Matrix stacked_ehat(const AlignmentModel& model) {
  Index rows = 0;
  for (const auto& s : model.subjects) rows += s.ehat.rows();
  Matrix e(rows, model.k);
  Index r = 0;
  for (const auto& s : model.subjects) {
    e.middleRows(r, s.ehat.rows()) = s.ehat;
    r += s.ehat.rows();
  }
  return e;
}

TEST(SubjectBasis, EnergyRuleOnKnownSpectrum) {
  const GramMatrix k = with_spectrum({9, 4, 1}, 1);
  const SubjectBasis at82 = subject_basis(k, 82);
  EXPECT_EQ(at82.retained_dim, 2);
  EXPECT_EQ(at82.total_rank, 3);
  EXPECT_NEAR(at82.energy_kept, 5.0 / 6.0, 1e-12);
  EXPECT_NEAR(at82.eigvals(0), 9.0, 1e-12);
  EXPECT_NEAR(at82.eigvals(1), 4.0, 1e-12);
  EXPECT_EQ(subject_basis(k, 100).retained_dim, 3);
  EXPECT_EQ(subject_basis(k, 50).retained_dim, 1);
  EXPECT_EQ(subject_basis(k, 83.3).retained_dim, 2);
  EXPECT_EQ(subject_basis(k, 83.4).retained_dim, 3);
}

TEST(SubjectBasis, RankDeficientReconstruction) {
  const Matrix h = oracle::centering_matrix(6);
  const Matrix a = h * oracle::random_matrix(6, 3, 2);
  const GramMatrix k{a * a.transpose(), true};
  const SubjectBasis b = subject_basis(k, 100);
  EXPECT_EQ(b.retained_dim, 3);
  EXPECT_EQ(b.total_rank, 3);
  EXPECT_LE(max_abs(b.eigvecs * b.eigvals.asDiagonal() * b.eigvecs.transpose() - k.entries), 1e-8);
  EXPECT_LE(max_abs(b.eigvecs.transpose() * b.eigvecs - Matrix::Identity(3, 3)), 1e-9);
  for (Index j = 1; j < 3; ++j) EXPECT_GT(b.eigvals(j - 1), b.eigvals(j));
  EXPECT_GT(b.eigvals(2), 0.0);
}

TEST(SubjectBasis, DegenerateAndBadEnergy) {
  try {
    subject_basis({Matrix::Zero(4, 4), true}, 82);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_subject);
  }
  EXPECT_THROW(subject_basis(with_spectrum({1, 2}, 3), 0.0), Error);
  EXPECT_THROW(subject_basis(with_spectrum({1, 2}, 3), 100.5), Error);
}

TEST(SubjectBasis, AgreesWithEigenSolver) {
  const Matrix a = oracle::random_matrix(30, 12, 4);
  const GramMatrix k = center_gram({a.transpose() * a, false});
  const SubjectBasis b = subject_basis(k, 100);
  const Vector ev = oracle::eigenvalues(k.entries).reverse();
  EXPECT_EQ(b.total_rank, 11);
  for (Index j = 0; j < b.retained_dim; ++j) EXPECT_NEAR(b.eigvals(j), ev(j), 1e-10 * ev(0));
  EXPECT_LE(max_abs(k.entries * b.eigvecs - b.eigvecs * b.eigvals.asDiagonal()), 1e-10 * ev(0));
}

TEST(AssembleCore, IdentityBasisReturnsLaplacian) {
  SubjectBasis b;
  b.eigvecs = Matrix::Identity(4, 4);
  b.eigvals = Vector::Ones(4);
  b.retained_dim = b.total_rank = 4;
  const Laplacian l = laplacian(build_category_graph(std::vector<LabelSequence>{{0, 1, 1, 0}}));
  EXPECT_EQ(assemble_core({b}, l), l.entries);
}

TEST(AssembleCore, ZeroLaplacian) {
  SubjectBasis b;
  b.eigvecs = oracle::random_matrix(3, 2, 5);
  b.retained_dim = 2;
  const Laplacian l = laplacian(Matrix::Zero(6, 6), {3, 3});
  EXPECT_EQ(assemble_core({b, b}, l), Matrix::Zero(4, 4));
}

TEST(AssembleCore, MatchesDenseBlockDiagonalOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<SubjectBasis> bases(2);
    bases[0].eigvecs = oracle::random_matrix(5, 2, seed * 3 + 1);
    bases[1].eigvecs = oracle::random_matrix(4, 3, seed * 3 + 2);
    const Laplacian l = laplacian(oracle::random_symmetric(9, seed * 3 + 3), {5, 4});
    const Matrix vstar = oracle::block_diagonal({bases[0].eigvecs, bases[1].eigvecs});
    EXPECT_LE(max_abs(assemble_core(bases, l) - vstar.transpose() * l.entries * vstar), 1e-10);
  }
}

TEST(AssembleCore, DimensionMismatch) {
  SubjectBasis b;
  b.eigvecs = Matrix::Identity(3, 3);
  try {
    assemble_core({b}, laplacian(Matrix::Zero(4, 4)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::assembly);
  }
}

TEST(SolveReduced, DiagonalMatrix) {
  const Matrix c = Vector((Vector(3) << 0.1, 0.5, 0.9).finished()).asDiagonal();
  const ReducedSolution r = solve_reduced(c, 2);
  EXPECT_LE(max_abs(r.ehat - Matrix::Identity(3, 2)), 1e-15);
  EXPECT_NEAR(r.eigenvalues(0), 0.1, 1e-15);
  EXPECT_NEAR(r.eigenvalues(1), 0.5, 1e-15);
  try {
    solve_reduced(c, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
}

TEST(SolveReduced, ObjectiveIsSumOfSmallestEigenvalues) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix c = oracle::random_symmetric(6, 50 + seed);
    const ReducedSolution r = solve_reduced(c, 3);
    const Vector ev = oracle::eigenvalues(c);
    EXPECT_NEAR((r.ehat.transpose() * c * r.ehat).trace(), ev.head(3).sum(), 1e-10);
    EXPECT_LE(max_abs(r.ehat.transpose() * r.ehat - Matrix::Identity(3, 3)), 1e-12);
  }
}

TEST(SolveReduced, SignConventionIsDeterministic) {
  const Matrix c = oracle::random_symmetric(5, 60);
  const ReducedSolution r = solve_reduced(c, 5);
  for (Index j = 0; j < 5; ++j) {
    Index arg;
    r.ehat.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.ehat(arg, j), 0.0);
  }
  const ReducedSolution flipped = solve_reduced(c, 5);
  EXPECT_EQ(r.ehat, flipped.ehat);
}

TEST(Objective, Examples) {
  Matrix y(1, 2);
  y << 0, 1;
  Matrix g(2, 2);
  g << 0, 1, 1, 0;
  EXPECT_DOUBLE_EQ(objective(y, laplacian(g)), 1.0);
  const Matrix same = Matrix::Constant(2, 5, 3.0);
  EXPECT_NEAR(objective(same, laplacian(oracle::random_symmetric(5, 61))), 0.0, 1e-12);
  EXPECT_THROW(objective(Matrix::Zero(2, 3), laplacian(g)), Error);
}

TEST(Objective, MatchesPairwiseOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix g = oracle::random_symmetric(6, 70 + seed);
    const Matrix y = oracle::random_matrix(3, 6, 90 + seed);
    EXPECT_LE(oracle::relative_error(objective(y, laplacian(g)), oracle::pairwise_objective(y, g)), 1e-10);
  }
}

TEST(Fit, IdenticalSubjectsAlignPerfectly) {
  const Matrix x = oracle::random_matrix(10, 6, 7);
  const MultiSubjectDataset data({{"a", x, std::nullopt}, {"b", x, std::nullopt}});
  FitOptions opt;
  opt.energies = {100};
  for (Index k = 1; k <= 5; ++k) {
    opt.k = k;
    const AlignmentModel model = fit(data, build_temporal_graph(2, 6), opt);
    EXPECT_LE(std::abs(model.objective), 1e-8) << "K=" << k;
  }
}

TEST(Fit, ConstraintHoldsAcrossKernelsAndEnergies) {
  const MultiSubjectDataset data = synth(3, 25, 20, 4, 0.3, 8);
  const CrossSubjectGraph g = build_category_graph(data.label_sequences());
  for (const auto& kernel : {KernelSpec::linear(), KernelSpec::polynomial(2, 1.0), KernelSpec::gaussian(0.05)})
    for (const double energy : {35.0, 82.0, 100.0}) {
      FitOptions opt;
      opt.kernels = {kernel};
      opt.energies = {energy};
      opt.k = 3;
      const AlignmentModel model = fit(data, g, opt);
      EXPECT_LE(max_abs(sum_of_outer_products(model) - Matrix::Identity(3, 3)), 1e-8);
      const Matrix e = stacked_ehat(model);
      EXPECT_LE(max_abs(e.transpose() * e - Matrix::Identity(3, 3)), 1e-9);
    }
}

TEST(Fit, ObjectiveEqualsSmallestReducedEigenvaluesAndTrace) {
  const MultiSubjectDataset data = synth(3, 20, 16, 3, 0.5, 9);
  const Laplacian l = laplacian(build_category_graph(data.label_sequences()));
  FitOptions opt;
  opt.energies = {82};
  opt.k = 4;
  const AlignmentModel model = fit(data, l, opt);
  std::vector<SubjectBasis> bases;
  for (const auto& s : model.subjects) bases.push_back(s.basis);
  const Vector ev = oracle::eigenvalues(assemble_core(bases, l));
  EXPECT_NEAR(model.objective, ev.head(4).sum(), 1e-10 * std::max(1.0, std::abs(ev.head(4).sum())));
  EXPECT_NEAR(objective(model.training_responses(), l), model.objective, 1e-10 * std::max(1.0, std::abs(model.objective)));
  EXPECT_NEAR(model.eigengap, ev(4) - ev(3), 1e-10);
}

TEST(Fit, ObjectiveNonDecreasingInKForNonNegativeGraphs) {
  const MultiSubjectDataset data = synth(3, 20, 16, 3, 0.5, 10);
  const CrossSubjectGraph g = build_temporal_graph(3, 16);
  FitOptions opt;
  opt.energies = {90};
  double previous = 0.0;
  for (Index k = 1; k <= 8; ++k) {
    opt.k = k;
    const double obj = fit(data, g, opt).objective;
    EXPECT_GE(obj, previous - 1e-12);
    previous = obj;
  }
}

TEST(Fit, ObjectiveIncrementIsNextReducedEigenvalue) {
  // Signed graphs have negative eigenvalues, so only the partial-sum structure holds.
  const MultiSubjectDataset data = synth(3, 20, 16, 3, 0.5, 10);
  const Laplacian l = laplacian(build_category_graph(data.label_sequences()));
  FitOptions opt;
  opt.energies = {90};
  opt.k = 1;
  AlignmentModel previous = fit(data, l, opt);
  for (Index k = 2; k <= 8; ++k) {
    opt.k = k;
    const AlignmentModel current = fit(data, l, opt);
    EXPECT_NEAR(current.objective - previous.objective, current.reduced_eigenvalues(k - 1), 1e-9);
    previous = current;
  }
}

TEST(Fit, InfeasibleK) {
  const MultiSubjectDataset data = synth(2, 10, 8, 2, 0.0, 11, 2);
  FitOptions opt;
  opt.energies = {100};
  opt.k = 5;  // each subject has rank 2 after centering
  try {
    fit(data, build_category_graph(data.label_sequences()), opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
}

TEST(Fit, GraphSizeMismatchAndDegenerateSubject) {
  const MultiSubjectDataset data = synth(2, 10, 8, 2, 0.1, 12, 2);
  EXPECT_THROW(fit(data, build_temporal_graph(2, 5), FitOptions{}), Error);
  const MultiSubjectDataset flat({{"a", Matrix::Constant(4, 5, 2.0), std::nullopt},
                                  {"b", oracle::random_matrix(4, 5, 3), std::nullopt}});
  FitOptions opt;
  opt.k = 1;
  try {
    fit(flat, build_temporal_graph(2, 5), opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_subject);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(Fit, ZeroEigengapRecordedOnTies) {
  const MultiSubjectDataset data({{"a", oracle::random_matrix(6, 5, 13), std::nullopt}});
  FitOptions opt;
  opt.energies = {100};
  opt.k = 2;
  const AlignmentModel model = fit(data, CrossSubjectGraph(Matrix::Zero(5, 5), {5}), opt);
  EXPECT_LE(std::abs(model.eigengap), 1e-12);
  EXPECT_EQ(model.objective, 0.0);
}

TEST(Fit, ThreadedMatchesSequential) {
  const MultiSubjectDataset data = synth(4, 20, 12, 3, 0.2, 14);
  const CrossSubjectGraph g = build_category_graph(data.label_sequences());
  FitOptions opt;
  opt.k = 3;
  const AlignmentModel a = fit(data, g, opt);
  opt.threads = 4;
  const AlignmentModel b = fit(data, g, opt);
  EXPECT_EQ(a.training_responses(), b.training_responses());
}

TEST(Fit, PerSubjectKernelsAndEnergies) {
  const MultiSubjectDataset data = synth(3, 20, 12, 3, 0.2, 18);
  FitOptions opt;
  opt.kernels = {KernelSpec::linear(), KernelSpec::gaussian(0.1), KernelSpec::polynomial(2, 1)};
  opt.energies = {100, 60, 82};
  opt.k = 2;
  const AlignmentModel model = fit(data, build_category_graph(data.label_sequences()), opt);
  EXPECT_EQ(model.subjects[1].kernel, KernelSpec::gaussian(0.1));
  EXPECT_EQ(model.subjects[1].energy_percent, 60);
  EXPECT_EQ(model.subjects[0].basis.retained_dim, model.subjects[0].basis.total_rank);
  opt.energies = {100, 60};
  EXPECT_THROW(fit(data, build_category_graph(data.label_sequences()), opt), Error);
}

TEST(Fit, SubjectOrderInvariance) {
  const MultiSubjectDataset data = synth(3, 20, 12, 3, 0.4, 15);
  const CrossSubjectGraph g = build_category_graph(data.label_sequences());
  FitOptions opt;
  opt.energies = {90};
  opt.k = 3;
  const AlignmentModel forward = fit(data, g, opt);

  const std::vector<std::size_t> order{2, 0, 1};
  std::vector<Subject> permuted;
  for (const auto s : order) permuted.push_back(data.subject(s));
  const MultiSubjectDataset swapped(permuted);
  const AlignmentModel backward = fit(swapped, build_category_graph(swapped.label_sequences()), opt);
  EXPECT_NEAR(forward.objective, backward.objective, 1e-10 * std::max(1.0, std::abs(forward.objective)));

  ASSERT_GT(forward.eigengap, 1e-6);
  Matrix y_back(opt.k, data.total_samples());
  std::vector<Index> starts{0, 12, 24};
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    y_back.middleCols(starts[order[pos]], 12) = backward.training_responses(pos);
  }
  const Matrix y = forward.training_responses();
  EXPECT_LE(max_abs(y.transpose() * y - y_back.transpose() * y_back), 1e-6);
}

TEST(Project, TrainingColumnsReproduceTrainingResponses) {
  const MultiSubjectDataset data = synth(3, 20, 16, 3, 0.3, 16);
  for (const auto& kernel : {KernelSpec::linear(), KernelSpec::gaussian(0.05), KernelSpec::polynomial(2, 1.0)}) {
    FitOptions opt;
    opt.kernels = {kernel};
    opt.k = 3;
    const AlignmentModel model = fit(data, build_category_graph(data.label_sequences()), opt);
    for (std::size_t i = 0; i < 3; ++i) {
      const Matrix y = project(model, i, data.subject(i).data).matrix;
      EXPECT_LE(max_abs(y - model.training_responses(i)), 1e-10);
    }
  }
}

TEST(Project, EmptyInputAndErrors) {
  const MultiSubjectDataset data = synth(2, 10, 8, 2, 0.3, 17, 2);
  FitOptions opt;
  opt.k = 2;
  const AlignmentModel model = fit(data, build_category_graph(data.label_sequences()), opt);
  const Matrix y = project(model, 0, Matrix(10, 0)).matrix;
  EXPECT_EQ(y.rows(), 2);
  EXPECT_EQ(y.cols(), 0);
  try {
    project(model, 0, Matrix::Zero(9, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  try {
    project(model, 5, Matrix::Zero(10, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::index);
  }
  EXPECT_THROW(project(model, std::string("nobody"), Matrix::Zero(10, 2)), Error);
}

TEST(Project, LinearMatchesExplicitMap) {
  const MultiSubjectDataset data = synth(3, 12, 10, 3, 0.4, 19, 2);
  FitOptions opt;
  opt.energies = {85};
  opt.k = 3;
  const AlignmentModel model = fit(data, build_category_graph(data.label_sequences()), opt);
  const Matrix z = oracle::random_matrix(12, 5, 20);
  for (std::size_t i = 0; i < 3; ++i) {
    const SubjectModel& s = model.subjects[i];
    // Standardized training features; their column mean is the feature-space mean.
    const Vector m = s.train.rowwise().mean();
    const Matrix phi = s.train.colwise() - m;
    const Matrix w = phi * s.basis.eigvecs * s.basis.eigvals.cwiseInverse().asDiagonal() * s.ehat;
    Matrix zs = z.colwise() - s.stats.means;
    zs.array().colwise() /= s.stats.stds.array();
    const Matrix expected = w.transpose() * (zs.colwise() - m);
    EXPECT_LE(max_abs(project(model, i, z).matrix - expected), 1e-10);
  }
}

TEST(Project, LowDimensionalProjectionIdentity) {
  // Phi(Z)^T Uhat Uhat^T Phi Vhat == Phi(Z)^T Phi Vhat for the linear kernel.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix phi = oracle::random_matrix(15, 8, 200 + seed);
    const Matrix phi_z = oracle::random_matrix(15, 4, 300 + seed);
    const SubjectBasis b = subject_basis({phi.transpose() * phi, false}, 70);
    const Matrix u_hat = phi * b.eigvecs * b.eigvals.cwiseSqrt().cwiseInverse().asDiagonal();
    const Matrix lhs = phi_z.transpose() * u_hat * u_hat.transpose() * phi * b.eigvecs;
    const Matrix rhs = phi_z.transpose() * phi * b.eigvecs;
    EXPECT_LE(max_abs(lhs - rhs), 1e-10 * std::max(1.0, max_abs(rhs)));
    // Without the truncated Vhat the equality generally fails.
    EXPECT_GT(max_abs(phi_z.transpose() * u_hat * u_hat.transpose() * phi - phi_z.transpose() * phi), 1e-6);
  }
}

void expect_naive_agreement(const MultiSubjectDataset& data, Index k, int& compared) {
  const Laplacian l = laplacian(build_category_graph(data.label_sequences()));
  FitOptions opt;
  opt.energies = {100};
  opt.k = k;
  const AlignmentModel a = fit(data, l, opt);
  const AlignmentModel b = naive_fit(data, l, NaiveOptions{{KernelSpec::linear()}, k});
  EXPECT_LE(oracle::relative_error(a.objective, b.objective), 1e-8);
  EXPECT_LE(oracle::relative_error(objective(b.training_responses(), l), b.objective), 1e-8);
  if (a.eigengap > 1e-6) {
    const Matrix ya = a.training_responses(), yb = b.training_responses();
    EXPECT_LE(max_abs(ya.transpose() * ya - yb.transpose() * yb), 1e-6);
    ++compared;
  }
}

TEST(NaiveFit, AgreesWithFitAtFullEnergy) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SCOPED_TRACE(seed);
    expect_naive_agreement(synth(3, 30, 20, 4, 0.5, 1000 + seed), 4, compared);
  }
}

TEST(NaiveFit, SharedGramAgreesWhenUnique) {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SCOPED_TRACE(seed);
    expect_naive_agreement(synth(3, 8, 20, 4, 0.5, 2000 + seed), 3, compared);
  }
  EXPECT_EQ(compared, 20);
}

TEST(NaiveFit, ZeroLaplacianSingleSubject) {
  const MultiSubjectDataset data({{"a", oracle::random_matrix(8, 6, 21), std::nullopt}});
  const CrossSubjectGraph zero(Matrix::Zero(6, 6), {6});
  FitOptions opt;
  opt.energies = {100};
  opt.k = 2;
  EXPECT_EQ(fit(data, zero, opt).objective, 0.0);
  EXPECT_NEAR(naive_fit(data, zero, NaiveOptions{{KernelSpec::linear()}, 2}).objective, 0.0, 1e-12);
}

TEST(NaiveFit, InfeasibleAndGuard) {
  const MultiSubjectDataset data = synth(2, 10, 8, 2, 0.0, 22, 2);
  const CrossSubjectGraph g = build_category_graph(data.label_sequences());
  try {
    naive_fit(data, g, NaiveOptions{{KernelSpec::linear()}, 5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::infeasible);
  }
  NaiveOptions small{{KernelSpec::linear()}, 1, 10};
  EXPECT_THROW(naive_fit(data, g, small), Error);
}

TEST(Overfitting, FullRankAlignedDataAlignsPerfectlyAtFullEnergy) {
  const MultiSubjectDataset data = synth(3, 30, 20, 4, 0.3, 23);
  const CrossSubjectGraph g = build_temporal_graph(3, 20, 1.0);
  FitOptions opt;
  opt.energies = {100};
  opt.k = 4;
  const AlignmentModel model = fit(data, g, opt);
  EXPECT_LE(model.reduced_eigenvalues.head(4).cwiseAbs().maxCoeff(), 1e-8);
  const Matrix y0 = model.training_responses(0);
  for (std::size_t i = 1; i < 3; ++i) EXPECT_LE(max_abs(model.training_responses(i) - y0), 1e-6);

  opt.energies = {82};
  EXPECT_GT(fit(data, g, opt).objective, 1e-3);
}

TEST(HaObjective, IdentityOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<Matrix> w, x;
    for (int i = 0; i < 3; ++i) {
      w.push_back(oracle::random_matrix(5, 2, 400 + seed * 10 + i));
      x.push_back(oracle::random_matrix(5, 4, 500 + seed * 10 + i));
    }
    const HaObjectivePair p = ha_objective_pair(w, x);
    EXPECT_LE(oracle::relative_error(p.lhs, p.rhs), 1e-10);
  }
}

TEST(HaObjective, DegenerateCases) {
  std::vector<Matrix> w(3, Matrix::Zero(5, 2)), x;
  for (int i = 0; i < 3; ++i) x.push_back(oracle::random_matrix(5, 4, 600 + i));
  const HaObjectivePair zero = ha_objective_pair(w, x);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  const HaObjectivePair single = ha_objective_pair({oracle::random_matrix(5, 2, 7)}, {x[0]});
  EXPECT_EQ(single.lhs, 0.0);
  EXPECT_EQ(single.rhs, 0.0);
  EXPECT_THROW(ha_objective_pair({w[0], w[1]}, {x[0], Matrix::Zero(5, 3)}), Error);
}

}  // namespace
}  // namespace gdm

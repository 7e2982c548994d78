// SPDX-License-Identifier: Apache-2.0
#include "promogen/errors.h"
#include "promogen/motion.h"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

using namespace promogen;

namespace {

Matrix randomMatrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m(i) = n(rng);
  }
  return m;
}

std::filesystem::path tempPath(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("promogen_test_" + name);
}

} // namespace

TEST_CASE("humanml skeleton layout") {
  const Skeleton s = Skeleton::humanml22();
  CHECK(s.jointCount() == 22);
  CHECK(s.featureDim() == 66);
  CHECK(s.anchorDim() == 63);
  CHECK(s.root() == 0);
  CHECK(s.footJoints() == std::vector<int>{10, 11});
  CHECK(s.column(0, 1) == 1);
  CHECK(s.column(1, 0) == 3);
  CHECK(s.column(21, 2) == 65);
}

TEST_CASE("skeleton rejects malformed trees") {
  const std::vector<Vector3> two(2, Vector3::Zero());
  CHECK_THROWS_AS(Skeleton({-1, -1}, two, {}), Error);
  CHECK_THROWS_AS(Skeleton({1, 0}, two, {}), Error);
  CHECK_THROWS_AS(Skeleton({-1, 0}, two, {5}), Error);
  CHECK_THROWS_AS(Skeleton({-1, 0}, std::vector<Vector3>(3, Vector3::Zero()), {}), Error);
  std::vector<Vector3> bad = two;
  bad[1].x() = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(Skeleton({-1, 0}, bad, {}), Error);
}

TEST_CASE("extract trajectory") {
  MotionSequence two{Matrix::Zero(2, 66)};
  two.features(1, 0) = 1.0;
  const Trajectory t = extractTrajectory(two);
  CHECK(t.frameCount() == 2);
  CHECK(t.positions(0, 0) == 0.0);
  CHECK(t.positions(1, 0) == 1.0);

  CHECK(extractTrajectory(MotionSequence{Matrix::Zero(5, 66)}).positions.isZero());

  const MotionSequence random{randomMatrix(64, 66, 1)};
  const Trajectory r = extractTrajectory(random);
  CHECK(r.positions.rows() == 64);
  CHECK(r.positions.cols() == 3);
  CHECK((r.positions == random.features.leftCols(3)));
}

TEST_CASE("withTrajectory round trip on pelvis columns") {
  const MotionSequence m{randomMatrix(10, 66, 2)};
  const Trajectory t{randomMatrix(10, 3, 3)};
  const MotionSequence replaced = withTrajectory(m, t);
  CHECK((extractTrajectory(replaced).positions == t.positions));
  CHECK((replaced.features.rightCols(63) == m.features.rightCols(63)));
  CHECK_THROWS_AS(withTrajectory(m, Trajectory{Matrix::Zero(9, 3)}), ShapeError);
}

TEST_CASE("gather anchors") {
  const MotionSequence m{randomMatrix(12, 66, 4)};
  const std::vector<int> first{0};
  const AnchorSet a = gatherAnchors(m, first);
  CHECK(a.size() == 1);
  CHECK((a.poses().row(0) == m.features.row(0).rightCols(63)));

  const std::vector<int> three{0, 5, 11};
  CHECK(gatherAnchors(m, three).size() == 3);

  const std::vector<int> reversed{11, 5};
  CHECK_THROWS_AS(gatherAnchors(m, reversed), InvalidAnchorPositions);
  const std::vector<int> outside{3, 12};
  CHECK_THROWS_AS(gatherAnchors(m, outside), InvalidAnchorPositions);
  const std::vector<int> negative{-1};
  CHECK_THROWS_AS(gatherAnchors(m, negative), InvalidAnchorPositions);
}

TEST_CASE("anchors carry no global displacement") {
  MotionSequence m{randomMatrix(12, 66, 5)};
  const std::vector<int> pos{1, 4, 9};
  const AnchorSet before = gatherAnchors(m, pos);
  m.features.leftCols(3).rowwise() += Eigen::RowVector3d(3.0, -1.0, 7.5);
  CHECK((gatherAnchors(m, pos).poses() == before.poses()));
}

TEST_CASE("anchor set construction") {
  CHECK_THROWS_AS(AnchorSet({3, 3}, Matrix::Zero(2, 4)), InvalidAnchorPositions);
  CHECK_THROWS_AS(AnchorSet({1, 2}, Matrix::Zero(3, 4)), ShapeError);
  Matrix poses(3, 2);
  poses << 1, 1, 2, 2, 3, 3;
  const std::vector<int> pos{9, 1, 4};
  const AnchorSet a = AnchorSet::fromUnsorted(pos, poses);
  CHECK(a.positions() == std::vector<int>{1, 4, 9});
  CHECK(a.poses()(0, 0) == 2);
  CHECK(a.poses()(1, 0) == 3);
  CHECK(a.poses()(2, 0) == 1);
  const std::vector<int> dup{2, 2, 5};
  CHECK_THROWS_AS(AnchorSet::fromUnsorted(dup, poses), InvalidAnchorPositions);
}

TEST_CASE("joint world positions") {
  const Skeleton s = Skeleton::humanml22();
  MotionSequence zeroOffsets{Matrix::Zero(4, 66)};
  zeroOffsets.features.leftCols(3) = randomMatrix(4, 3, 6);
  const JointPositions z = jointWorldPositions(zeroOffsets, s);
  for (Eigen::Index f = 0; f < 4; ++f) {
    for (int j = 0; j < 22; ++j) {
      CHECK((z.at(f, j) == z.at(f, 0)));
    }
  }

  MotionSequence single{Matrix::Zero(1, 66)};
  single.features.block<1, 3>(0, 0) << 1, 2, 3;
  single.features.block<1, 3>(0, s.column(5, 0)) << 0, 1, 0;
  CHECK((jointWorldPositions(single, s).at(0, 5) == Vector3(1, 3, 3)));

  const MotionSequence random{randomMatrix(8, 66, 7)};
  const JointPositions p = jointWorldPositions(random, s);
  for (Eigen::Index f = 0; f < 8; ++f) {
    CHECK((p.at(f, 0) == random.features.block<1, 3>(f, 0).transpose()));
    for (int j = 1; j < 22; ++j) {
      const Vector3 offset = random.features.block<1, 3>(f, s.column(j, 0)).transpose();
      CHECK((p.at(f, j) - p.at(f, 0) - offset).norm() < 1e-12);
    }
  }

  CHECK_THROWS_AS(jointWorldPositions(MotionSequence{Matrix::Zero(3, 65)}, s), ShapeError);
}

TEST_CASE("joint world positions are translation equivariant") {
  const Skeleton s = Skeleton::humanml22();
  MotionSequence m{randomMatrix(6, 66, 8)};
  const JointPositions before = jointWorldPositions(m, s);
  const Vector3 v(0.5, -2.0, 1.25);
  m.features.leftCols(3).rowwise() += v.transpose();
  const JointPositions after = jointWorldPositions(m, s);
  for (Eigen::Index f = 0; f < 6; ++f) {
    for (int j = 0; j < 22; ++j) {
      CHECK((after.at(f, j) - before.at(f, j) - v).norm() < 1e-12);
    }
  }
}

TEST_CASE("fromJointPositions inverts jointWorldPositions") {
  const Skeleton s = Skeleton::humanml22();
  const MotionSequence m{randomMatrix(5, 66, 9)};
  const MotionSequence back = fromJointPositions(jointWorldPositions(m, s));
  CHECK((back.features - m.features).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("validate") {
  CHECK((validate(MotionSequence{randomMatrix(64, 66, 10)}, 66) == ValidationStatus::kOk));
  MotionSequence nan{randomMatrix(64, 66, 11)};
  nan.features(10, 20) = std::numeric_limits<double>::quiet_NaN();
  CHECK((validate(nan) == ValidationStatus::kNonFinite));
  CHECK((validate(MotionSequence{Matrix::Zero(1, 66)}) == ValidationStatus::kTooShort));
  CHECK((validate(MotionSequence{Matrix::Zero(4, 65)}, 66) == ValidationStatus::kBadWidth));
  CHECK_THROWS_AS(requireValid(nan), Error);
}

TEST_CASE("pmg round trip") {
  MotionSequence m{randomMatrix(7, 66, 12).cast<float>().cast<double>()};
  m.fps = 30.0;
  const auto path = tempPath("roundtrip.pmg");
  writePmg(path, m, 22);
  const MotionSequence back = readPmg(path);
  CHECK((back.features == m.features));
  CHECK(back.fps == 30.0);
  std::filesystem::remove(path);
}

TEST_CASE("pmg rejects truncated payload") {
  const MotionSequence m{randomMatrix(4, 66, 13)};
  const auto path = tempPath("truncated.pmg");
  writePmg(path, m, 22);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 4);
  CHECK_THROWS_AS(readPmg(path), FormatError);
  std::filesystem::remove(path);
}

TEST_CASE("trajectory csv round trip") {
  const Trajectory t{randomMatrix(9, 3, 14)};
  const auto path = tempPath("traj.csv");
  writeTrajectoryCsv(path, t);
  const Trajectory back = readTrajectoryCsv(path);
  CHECK((back.positions == t.positions));
  std::filesystem::remove(path);
}

#include <gtest/gtest.h>

#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>

#include "dform/io.hpp"
#include "dform/random.hpp"

using namespace dform;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  fs::path d = fs::temp_directory_path() / ("dform_io_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

FormField sample_field() {
  const Chart c = Chart::unit_box(2, -1.0, -0.4, 0.7);
  return random_smooth_field(Patch::full(c, Grid::uniform(c, 7)), 1, 1, 3);
}

}  // namespace

TEST(Io, RoundTripIsByteIdentical) {
  const fs::path d = scratch_dir();
  const FormField f = sample_field();
  write_field((d / "a.dff").string(), f);
  const FieldFile ff = read_field_file((d / "a.dff").string());
  EXPECT_EQ(ff.field.data(), f.data());
  EXPECT_EQ(ff.field.k(), 1);
  write_field_file((d / "b.dff").string(), ff);
  EXPECT_EQ(detail::read_all((d / "a.dff").string()), detail::read_all((d / "b.dff").string()));
  fs::remove_all(d);
}

TEST(Io, FaceFieldsKeepTheirFace) {
  const Chart c = Chart::unit_box(3, 1.0);
  const Grid g = Grid::uniform(c, 5);
  const FormField f = sample(Patch::face_of(c, g, 3), 1, 0, [](const double* x, double* v) {
    v[0] = x[0];
    v[1] = x[2];
  });
  const FormField r = decode_field(encode_field(f, field_header(f))).field;
  EXPECT_EQ(r.face(), 3);
  EXPECT_EQ(r.data(), f.data());
}

TEST(Io, Rejections) {
  const FormField f = sample_field();
  const std::string good = encode_field(f, field_header(f));
  const auto nl = good.find('\n');
  const std::string header = good.substr(0, nl), payload = good.substr(nl);
  auto with_header = [&](const std::string& key, const nlohmann::json& value) {
    auto h = nlohmann::json::parse(header);
    h[key] = value;
    return h.dump() + payload;
  };
  EXPECT_EQ(kind_of([&] { decode_field(with_header("version", 2)); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([&] { decode_field(with_header("ordering", "col")); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([&] { decode_field(with_header("extra", 1)); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([&] { decode_field(good.substr(0, good.size() - 8)); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([&] { decode_field("not json\n"); }), ErrorKind::Io);
  EXPECT_EQ(kind_of([&] { decode_field(with_header("degrees", nlohmann::json::array({3, 0}))); }), ErrorKind::DegreeOverflow);
  std::string nan_payload = good;
  const double bad = std::nan("");
  std::memcpy(nan_payload.data() + nl + 1, &bad, 8);
  EXPECT_EQ(kind_of([&] { decode_field(nan_payload); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([&] { read_field("/nonexistent/x.dff"); }), ErrorKind::Io);
}

TEST(Io, Traction) {
  const fs::path d = scratch_dir();
  const Chart c = Chart::unit_box(2, 0.0);
  const Grid g = Grid::uniform(c, 9);
  const FormField tau1 = sample(Patch::face_of(c, g, 1), 1, 0, [](const double* x, double* v) { v[0] = x[1]; });
  write_field((d / "tau1.dff").string(), tau1);
  std::ofstream(d / "t.json") << R"({"rho": [1, 1, 2, 0], "tau": [0, "tau1.dff", 0, 0]})";
  const TractionData t = read_traction((d / "t.json").string(), c, g);
  EXPECT_EQ(t.rho[2].at(0)[0], 2.0);
  EXPECT_EQ(t.tau[1].data(), tau1.data());
  std::ofstream(d / "short.json") << R"({"rho": [1, 1, 2], "tau": [0, 0, 0]})";
  EXPECT_EQ(kind_of([&] { read_traction((d / "short.json").string(), c, g); }), ErrorKind::Validation);
  std::ofstream(d / "tau.json") << R"({"rho": [1, 1, 1, 1], "tau": [1, 0, 0, 0]})";
  EXPECT_EQ(kind_of([&] { read_traction((d / "tau.json").string(), c, g); }), ErrorKind::Validation);
  fs::remove_all(d);
}

TEST(Io, RunConfig) {
  const RunConfig c = RunConfig::parse("# tuned\ntol = 1e-12\nlevels=4  # more\n\nreport = r.json\n");
  EXPECT_EQ(c.tol, 1e-12);
  EXPECT_EQ(c.levels, 4);
  EXPECT_EQ(c.report, "r.json");
  EXPECT_EQ(c.seed, RunConfig{}.seed);
  EXPECT_EQ(kind_of([] { RunConfig::parse("tolerance = 1"); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([] { RunConfig::parse("tol = abc"); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([] { RunConfig::parse("tol = -1"); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([] { RunConfig::parse("levels = 2.5"); }), ErrorKind::Validation);
  EXPECT_EQ(kind_of([] { RunConfig::parse("just words"); }), ErrorKind::Validation);
  EXPECT_EQ(c.to_json()["levels"], 4);
}

TEST(Io, ReportsStayValidJson) {
  Norms n;
  n.l2 = std::numeric_limits<double>::infinity();
  n.max = 1.5;
  const auto j = to_json(n);
  EXPECT_TRUE(j["l2"].is_null());
  EXPECT_EQ(j["max"], 1.5);
  RateResult r;
  r.residuals = {1.0, std::nan("")};
  EXPECT_NO_THROW(nlohmann::json::parse(to_json(r).dump()));
}

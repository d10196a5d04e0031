#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "compselect/corpus.hpp"
#include "compselect/generation.hpp"

namespace testutil {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("compselect-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline compselect::QaSample make_sample(std::string id, std::string question, std::vector<std::string> answers,
                                        const std::vector<std::string>& doc_texts) {
  compselect::QaSample s{std::move(id), std::move(question), std::move(answers), {}};
  for (const auto& t : doc_texts) s.docs.push_back({"", t});
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

/// Answers every request with a caller-supplied function.
class ScriptedGenerator final : public compselect::Generator {
 public:
  explicit ScriptedGenerator(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  compselect::GeneratorResponse generate(const compselect::GeneratorRequest& request) override {
    ++calls;
    compselect::GeneratorResponse r;
    r.text = fn_(request.prompt);
    r.latency_ms = 1.0;
    return r;
  }
  std::string default_model() const override { return "scripted"; }
  std::atomic<int> calls{0};

 private:
  std::function<std::string(const std::string&)> fn_;
};

inline std::string fixture_path(const std::string& name) { return std::string(COMPSELECT_FIXTURES) + "/" + name; }

}  // namespace testutil

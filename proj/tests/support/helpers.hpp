#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tjit/parse.hpp"
#include "tjit/validate.hpp"

#ifndef TJIT_SOURCE_DIR
#error "TJIT_SOURCE_DIR must name the repository root"
#endif

namespace testsupport {

inline std::string source_dir() { return TJIT_SOURCE_DIR; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline tjit::Program load_program(const std::string& relpath) {
  tjit::Program p =
      tjit::parse_program(read_file(source_dir() + "/" + relpath));
  if (!tjit::is_valid(p))
    throw std::runtime_error(relpath + " does not validate");
  return p;
}

inline tjit::Program load_corpus(const std::string& name) {
  return load_program("corpus/" + name);
}

inline std::vector<std::string> corpus_names() {
  std::vector<std::string> names;
  for (const auto& e :
       std::filesystem::directory_iterator(source_dir() + "/corpus")) {
    if (e.path().extension() == ".cir")
      names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace testsupport

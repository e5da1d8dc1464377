#include "tjit/behavior.hpp"

#include <sstream>

namespace tjit {

std::string status_line(const Behavior& b) {
  switch (b.status) {
    case RunStatus::Terminated:
      return "status: Terminated " + std::to_string(b.result);
    case RunStatus::Errored:
      return "status: Errored " + b.error;
    case RunStatus::StepCapReached:
      return "status: StepCapReached";
  }
  return "status: ?";
}

std::string to_string(const Behavior& b) {
  std::ostringstream out;
  out << "trace [";
  for (std::size_t i = 0; i < b.trace.size(); ++i) {
    if (i) out << ", ";
    out << b.trace[i];
  }
  out << "] " << status_line(b).substr(8);
  return out.str();
}

int exit_code(const Behavior& b) {
  switch (b.status) {
    case RunStatus::Terminated: return 0;
    case RunStatus::Errored: return 1;
    case RunStatus::StepCapReached: return 2;
  }
  return 1;
}

}  // namespace tjit

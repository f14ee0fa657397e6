#include "posekit/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "posekit/errors.hpp"

namespace posekit {

namespace {
constexpr const char* kMagic = "posekit-checkpoint v1";
}

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << kMagic << "\n" << tensors.size() << "\n";
  for (const NamedTensor& nt : tensors) {
    f << nt.name << "\n" << dump_tensor(nt.tensor);
  }
  if (!f) throw IoError("failed writing checkpoint '" + path + "'");
}

std::vector<NamedTensor> load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << f.rdbuf();
  std::string text = buffer.str();

  std::istringstream iss(text);
  std::string line;
  if (!std::getline(iss, line) || line != kMagic) {
    throw CheckpointError("'" + path + "' is not a " + std::string(kMagic) + " file");
  }
  std::size_t count = 0;
  if (!(iss >> count)) throw CheckpointError("missing tensor count in '" + path + "'");
  iss.ignore();  // trailing newline

  std::vector<NamedTensor> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    NamedTensor nt;
    if (!std::getline(iss, nt.name) || nt.name.empty()) {
      throw CheckpointError("truncated checkpoint '" + path + "'");
    }
    std::string shape_line;
    if (!std::getline(iss, shape_line)) throw CheckpointError("truncated checkpoint '" + path + "'");

    // Element count from the shape line, then that many values.
    std::size_t n = 1;
    {
      std::istringstream hs(shape_line);
      int d = 0;
      bool any = false;
      while (hs >> d) {
        n *= static_cast<std::size_t>(d);
        any = true;
      }
      if (!any) throw CheckpointError("bad shape line in '" + path + "'");
    }
    std::string values;
    values.reserve(n * 20);
    std::string tok;
    for (std::size_t v = 0; v < n; ++v) {
      if (!(iss >> tok)) throw CheckpointError("truncated tensor data in '" + path + "'");
      values += tok;
      values.push_back(' ');
    }
    iss.ignore();
    try {
      nt.tensor = parse_tensor(shape_line + "\n" + values);
    } catch (const Error& e) {
      throw CheckpointError("bad tensor '" + nt.name + "' in '" + path + "': " + e.what());
    }
    out.push_back(std::move(nt));
  }
  return out;
}

}  // namespace posekit

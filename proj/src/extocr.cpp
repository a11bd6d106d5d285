// Copyright 2026 The lprbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lpr/extocr.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>
#include <wordexp.h>

#include <atomic>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

namespace lpr {

namespace fs = std::filesystem;

void EngineSpec::validate() const {
  const std::size_t first = command_template.find("{input}");
  if (first == std::string::npos || command_template.find("{input}", first + 1) != std::string::npos) {
    throw ParameterError("engine command must contain {input} exactly once: '" + command_template + "'");
  }
  if (timeout_ms <= 0) throw ParameterError("engine timeout must be positive");
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

std::string normalize_engine_text(const std::string& raw, bool postprocess, const CharSet& charset) {
  std::size_t b = 0, e = raw.size();
  while (b < e && std::isspace(static_cast<unsigned char>(raw[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(raw[e - 1]))) --e;
  std::string text = raw.substr(b, e - b);
  if (!postprocess) return text;
  std::u32string kept;
  for (char32_t ch : utf8_to_u32(text)) {
    if (ch < 128) ch = static_cast<char32_t>(std::toupper(static_cast<int>(ch)));
    if (charset.contains(ch)) kept.push_back(ch);
  }
  return u32_to_utf8(kept);
}

namespace {

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (pipe2(fd, O_CLOEXEC) != 0) throw EngineError(std::string("pipe failed: ") + std::strerror(errno), "");
  }
  ~Pipe() {
    for (int f : fd)
      if (f >= 0) close(f);
  }
  void close_end(int i) {
    if (fd[i] >= 0) close(fd[i]);
    fd[i] = -1;
  }
};

struct ProcessOutput {
  int status = 0;
  bool timed_out = false;
  std::string out, err;
};

ProcessOutput run_shell(const std::string& command, long timeout_ms) {
  Pipe out, err;
  const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
  const pid_t pid = fork();
  if (pid < 0) throw EngineError(std::string("fork failed: ") + std::strerror(errno), "");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(out.fd[1], STDOUT_FILENO);
    dup2(err.fd[1], STDERR_FILENO);
    const int devnull = open("/dev/null", O_RDONLY);
    if (devnull >= 0) dup2(devnull, STDIN_FILENO);
    execv(argv[0], const_cast<char* const*>(argv));
    _exit(127);
  }
  setpgid(pid, pid);
  out.close_end(1);
  err.close_end(1);

  ProcessOutput result;
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  pollfd fds[2] = {{out.fd[0], POLLIN, 0}, {err.fd[0], POLLIN, 0}};
  int open_fds = 2;
  char buf[4096];
  while (open_fds > 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      result.timed_out = true;
      break;
    }
    const int rc = poll(fds, 2, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) break;
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const ssize_t n = read(fds[i].fd, buf, sizeof buf);
      if (n > 0) {
        (i == 0 ? result.out : result.err).append(buf, static_cast<std::size_t>(n));
      } else if (n == 0 || errno != EINTR) {
        fds[i].fd = -1;
        --open_fds;
      }
    }
  }
  if (result.timed_out) kill(-pid, SIGKILL);
  // Output pipes are closed; wait for the exit status within the deadline.
  while (!result.timed_out) {
    const pid_t w = waitpid(pid, &result.status, WNOHANG);
    if (w == pid) return result;
    if (w < 0 && errno != EINTR) return result;
    if (std::chrono::steady_clock::now() >= deadline) {
      result.timed_out = true;
      kill(-pid, SIGKILL);
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  while (waitpid(pid, &result.status, 0) < 0 && errno == EINTR) {
  }
  return result;
}

bool is_executable(const fs::path& p) {
  struct stat st {};
  return stat(p.c_str(), &st) == 0 && S_ISREG(st.st_mode) && access(p.c_str(), X_OK) == 0;
}

}  // namespace

EngineOutput recognize_external(const EngineSpec& spec, const std::string& image_path) {
  spec.validate();
  if (!fs::exists(image_path)) throw ParameterError("engine input does not exist: " + image_path);
  std::string command = spec.command_template;
  command.replace(command.find("{input}"), 7, shell_quote(image_path));
  const ProcessOutput run = run_shell(command, spec.timeout_ms);
  if (run.timed_out) {
    throw EngineTimeout("engine timed out after " + std::to_string(spec.timeout_ms) + " ms", run.err);
  }
  if (!WIFEXITED(run.status) || WEXITSTATUS(run.status) != 0) {
    const std::string how = WIFEXITED(run.status) ? "exit status " + std::to_string(WEXITSTATUS(run.status))
                                                  : "signal " + std::to_string(WTERMSIG(run.status));
    std::string msg = "engine failed with " + how;
    if (!run.err.empty()) msg += ": " + normalize_engine_text(run.err, false, spec.charset);
    throw EngineError(msg, run.err);
  }
  EngineOutput o;
  o.text = normalize_engine_text(run.out, spec.postprocess, spec.charset);
  o.empty = o.text.empty();
  return o;
}

bool engine_available(const EngineSpec& spec) {
  // wordexp rejects braces, so the placeholder is swapped for a plain word.
  std::string line = spec.command_template;
  const std::size_t at = line.find("{input}");
  if (at == std::string::npos) return false;
  line.replace(at, 7, "input");
  wordexp_t words;
  if (wordexp(line.c_str(), &words, WRDE_NOCMD) != 0) return false;
  const std::string exe = words.we_wordc > 0 ? words.we_wordv[0] : "";
  wordfree(&words);
  if (exe.empty() || line.find_first_not_of(" \t") == at) return false;
  if (exe.find('/') != std::string::npos) return is_executable(exe);
  const char* path = std::getenv("PATH");
  std::istringstream dirs(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (!dir.empty() && is_executable(fs::path(dir) / exe)) return true;
  }
  return false;
}

namespace {

class TempDir {
 public:
  explicit TempDir(const fs::path& root) {
    std::string templ = (root / "lprbench-XXXXXX").string();
    if (!mkdtemp(templ.data())) throw IoError("cannot create temp directory under " + root.string());
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

}  // namespace

BenchResult bench_external(const EngineSpec& spec, const Manifest& manifest,
                           const std::vector<PreprocessStep>& pipeline, const BenchOptions& options) {
  spec.validate();
  const std::size_t n = manifest.entries.size();
  BenchResult result;
  result.records.resize(n);
  std::vector<std::optional<std::string>> errors(n);
  const TempDir tmp(options.temp_root ? fs::path(*options.temp_root) : fs::temp_directory_path());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      const ManifestEntry& e = manifest.entries[i];
      PredictionRecord& rec = result.records[i];
      rec.ground_truth = e.label;
      rec.sample_id = e.filename;
      try {
        std::string input = manifest.image_path(e);
        if (!pipeline.empty()) {
          const Image processed = apply_pipeline(load_image(input), pipeline);
          input = (tmp.path() / fs::path(e.filename).filename()).replace_extension(".png").string();
          save_png(processed, input);
        }
        rec.predicted = recognize_external(spec, input).text;
        if (!pipeline.empty()) fs::remove(input);
      } catch (const std::exception& ex) {
        rec.predicted.clear();
        errors[i] = ex.what();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, n));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) result.failures.push_back({manifest.entries[i].filename, *errors[i]});
  }
  if (2 * result.failures.size() > n) {
    std::string msg = std::to_string(result.failures.size()) + " of " + std::to_string(n) +
                      " samples failed; first error (" + result.failures.front().sample_id +
                      "): " + result.failures.front().message;
    throw BenchAborted(msg);
  }
  return result;
}

}  // namespace lpr

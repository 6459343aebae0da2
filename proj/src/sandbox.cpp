#include "optbench/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace fs = std::filesystem;

namespace optbench {

// ------------------------------------------------------------- toolchain

void Toolchain::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorKind::InvalidToolchain, msg); };
  if (!(compile_timeout_s > 0) || !std::isfinite(compile_timeout_s)) bad("compile_timeout_s must be positive");
  if (!(run_timeout_s > 0) || !std::isfinite(run_timeout_s)) bad("run_timeout_s must be positive");
  if (mem_limit_mb <= 0) bad("mem_limit_mb must be positive");
  if (output_limit_kb <= 0) bad("output_limit_kb must be positive");
  if (trim(run_cmd).empty()) bad("run_cmd is empty");
  if (!trim(compile_cmd).empty()) {
    if (compile_cmd.find("{src}") == std::string::npos || compile_cmd.find("{bin}") == std::string::npos)
      bad("compile_cmd must reference {src} and {bin}");
    if (run_cmd.find("{bin}") == std::string::npos && run_cmd.find("{src}") == std::string::npos)
      bad("run_cmd must reference {bin} or {src}");
  } else if (run_cmd.find("{src}") == std::string::npos) {
    bad("run_cmd must reference {src} when there is no compile step");
  }
}

Toolchain toolchain_preset(const std::string& name) {
  if (name == "gcc-c++17-O3" || name == "gcc") return Toolchain{};
  throw Error(ErrorKind::InvalidToolchain, "unknown toolchain preset '" + name + "'");
}

nlohmann::json to_json(const Toolchain& t) {
  return {{"name", t.name},
          {"compile_cmd", t.compile_cmd},
          {"run_cmd", t.run_cmd},
          {"source_ext", t.source_ext},
          {"compile_timeout_s", t.compile_timeout_s},
          {"run_timeout_s", t.run_timeout_s},
          {"mem_limit_mb", t.mem_limit_mb},
          {"output_limit_kb", t.output_limit_kb}};
}

Toolchain toolchain_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "toolchain must be an object");
  Toolchain t = toolchain_preset(j.value("preset", std::string("gcc-c++17-O3")));
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") continue;
      else if (key == "name") t.name = value.get<std::string>();
      else if (key == "compile_cmd") t.compile_cmd = value.get<std::string>();
      else if (key == "run_cmd") t.run_cmd = value.get<std::string>();
      else if (key == "source_ext") t.source_ext = value.get<std::string>();
      else if (key == "compile_timeout_s") t.compile_timeout_s = value.get<double>();
      else if (key == "run_timeout_s") t.run_timeout_s = value.get<double>();
      else if (key == "mem_limit_mb") t.mem_limit_mb = value.get<int>();
      else if (key == "output_limit_kb") t.output_limit_kb = value.get<int>();
      else throw Error(ErrorKind::ConfigError, "unknown toolchain key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("toolchain: ") + e.what());
  }
  t.validate();
  return t;
}

std::string compiler_binary() {
  const char* env = std::getenv("OPTBENCH_CXX");
  return env && *env ? std::string(env) : std::string("g++");
}

std::string to_string(CompileStatus s) {
  switch (s) {
    case CompileStatus::Ok: return "Ok";
    case CompileStatus::Error: return "Error";
    case CompileStatus::Timeout: return "Timeout";
  }
  return "Error";
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "Ok";
    case RunStatus::RuntimeError: return "RuntimeError";
    case RunStatus::Timeout: return "Timeout";
    case RunStatus::OutputLimit: return "OutputLimit";
    case RunStatus::NotRun: return "NotRun";
  }
  return "NotRun";
}

double ExecutionResult::median_ms() const {
  if (wall_times_ms.empty()) return 0.0;
  std::vector<double> v = wall_times_ms;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json to_json(const ExecutionResult& r) {
  return {{"input_id", r.input_id},
          {"compile", to_string(r.compile)},
          {"compile_diagnostics", r.compile_diagnostics},
          {"run", to_string(r.run)},
          {"run_detail", r.run_detail},
          {"stdout", r.stdout_text},
          {"stderr", r.stderr_text},
          {"wall_times_ms", r.wall_times_ms},
          {"median_ms", r.median_ms()},
          {"nondeterministic", r.nondeterministic}};
}

// ------------------------------------------------------------ processes

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string resolve_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) return name;
  const char* path = std::getenv("PATH");
  std::string dirs = path ? path : "/usr/bin:/bin";
  std::stringstream ss(dirs);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) dir = ".";
    std::string candidate = dir + "/" + name;
    if (::access(candidate.c_str(), X_OK) == 0) return candidate;
  }
  return name;
}

void set_nonblock(int fd) { ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL) | O_NONBLOCK); }

std::string describe_signal(int sig) {
  const char* name = ::strsignal(sig);
  return "killed by signal " + std::to_string(sig) + (name ? std::string(" (") + name + ")" : "");
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& stdin_data,
                          const ProcessLimits& limits, const fs::path& cwd) {
  ignore_sigpipe_once();
  ProcessResult res;
  if (argv.empty()) {
    res.spawn_error = "empty command";
    return res;
  }
  // Everything the child touches is prepared before fork.
  const std::string exe = resolve_executable(argv[0]);
  std::vector<char*> cargv;
  for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);
  const std::string cwd_str = cwd.string();

  int in_pipe[2], out_pipe[2], err_pipe[2], exec_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) || ::pipe2(out_pipe, O_CLOEXEC) || ::pipe2(err_pipe, O_CLOEXEC) ||
      ::pipe2(exec_pipe, O_CLOEXEC)) {
    throw Error(ErrorKind::SandboxFailure, std::string("pipe: ") + std::strerror(errno));
  }
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::SandboxFailure, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::dup2(err_pipe[1], 2);
    if (!cwd_str.empty() && ::chdir(cwd_str.c_str()) != 0) {
      int e = errno;
      (void)!::write(exec_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    struct rlimit rl;
    if (limits.address_space_bytes) {
      rl.rlim_cur = rl.rlim_max = *limits.address_space_bytes;
      ::setrlimit(RLIMIT_AS, &rl);
    }
    if (limits.file_size_bytes) {
      rl.rlim_cur = rl.rlim_max = *limits.file_size_bytes;
      ::setrlimit(RLIMIT_FSIZE, &rl);
    }
    const rlim_t cpu = static_cast<rlim_t>(std::ceil(limits.timeout_s)) + 1;
    rl.rlim_cur = cpu;
    rl.rlim_max = cpu + 1;
    ::setrlimit(RLIMIT_CPU, &rl);
    ::execv(exe.c_str(), cargv.data());
    int e = errno;
    (void)!::write(exec_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);

  int in_fd = in_pipe[1];
  const int out_fd = out_pipe[0];
  const int err_fd = err_pipe[0];
  set_nonblock(in_fd);
  set_nonblock(out_fd);
  set_nonblock(err_fd);
  std::size_t written = 0;
  if (stdin_data.empty()) {
    ::close(in_fd);
    in_fd = -1;
  }
  bool out_open = true, err_open = true;
  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(limits.timeout_s));
  auto kill_group = [&] { ::kill(-pid, SIGKILL); };
  char buf[65536];
  while (out_open || err_open) {
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      res.timed_out = true;
      kill_group();
      break;
    }
    const int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1);
    pollfd fds[3];
    int nfds = 0;
    int idx_out = -1, idx_err = -1, idx_in = -1;
    if (out_open) { fds[nfds] = {out_fd, POLLIN, 0}; idx_out = nfds++; }
    if (err_open) { fds[nfds] = {err_fd, POLLIN, 0}; idx_err = nfds++; }
    if (in_fd >= 0) { fds[nfds] = {in_fd, POLLOUT, 0}; idx_in = nfds++; }
    const int rc = ::poll(fds, nfds, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      kill_group();
      throw Error(ErrorKind::SandboxFailure, std::string("poll: ") + std::strerror(errno));
    }
    if (idx_in >= 0 && fds[idx_in].revents) {
      if (fds[idx_in].revents & (POLLERR | POLLHUP)) {
        ::close(in_fd);
        in_fd = -1;
      } else {
        const ssize_t n = ::write(in_fd, stdin_data.data() + written, stdin_data.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN) || written == stdin_data.size()) {
          ::close(in_fd);
          in_fd = -1;
        }
      }
    }
    auto drain = [&](int fd, bool& open, std::string& sink, bool is_stdout) {
      for (;;) {
        const ssize_t n = ::read(fd, buf, sizeof buf);
        if (n > 0) {
          sink.append(buf, static_cast<std::size_t>(n));
          if (sink.size() > limits.output_limit_bytes) {
            sink.resize(limits.output_limit_bytes);
            if (is_stdout) {
              res.output_limited = true;
              kill_group();
              open = false;
              return;
            }
          }
          continue;
        }
        if (n == 0 || (errno != EAGAIN && errno != EINTR)) open = false;
        return;
      }
    };
    if (idx_out >= 0 && fds[idx_out].revents) drain(out_fd, out_open, res.out, true);
    if (res.output_limited) break;
    if (idx_err >= 0 && fds[idx_err].revents) drain(err_fd, err_open, res.err, false);
  }
  if (in_fd >= 0) ::close(in_fd);
  ::close(out_fd);
  ::close(err_fd);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  // Reap anything the program left behind in its process group.
  ::kill(-pid, SIGKILL);

  int exec_errno = 0;
  if (::read(exec_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno)
    res.spawn_error = std::string("cannot execute '") + argv[0] + "': " + std::strerror(exec_errno);
  ::close(exec_pipe[0]);

  if (WIFEXITED(status)) {
    res.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    res.term_signal = WTERMSIG(status);
    if (res.term_signal == SIGXCPU) res.timed_out = true;
  }
  return res;
}

// --------------------------------------------------------------- sandbox

namespace {

std::vector<std::string> expand_template(const std::string& tmpl, const fs::path& src,
                                         const fs::path& bin) {
  std::vector<std::string> argv;
  for (std::string word : split_whitespace(tmpl)) {
    std::string out;
    for (std::size_t i = 0; i < word.size();) {
      if (word.compare(i, 5, "{src}") == 0) { out += src.string(); i += 5; }
      else if (word.compare(i, 5, "{bin}") == 0) { out += bin.string(); i += 5; }
      else if (word.compare(i, 5, "{cxx}") == 0) { out += compiler_binary(); i += 5; }
      else out += word[i++];
    }
    argv.push_back(std::move(out));
  }
  return argv;
}

}  // namespace

Sandbox::Sandbox(Toolchain toolchain, fs::path workdir)
    : toolchain_(std::move(toolchain)), workdir_(std::move(workdir)) {
  toolchain_.validate();
  fs::create_directories(workdir_);
  workdir_ = fs::absolute(workdir_);
}

fs::path Sandbox::new_job_dir() {
  const auto n = next_job_.fetch_add(1);
  fs::path dir = workdir_ / ("job-" + std::to_string(::getpid()) + "-" + std::to_string(n));
  fs::create_directories(dir);
  return dir;
}

CompileResult Sandbox::compile(const std::string& source) {
  const std::string key =
      sha256_hex(to_json(toolchain_).dump() + '\0' + compiler_binary() + '\0' + source);
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = cache_.find(key); it != cache_.end() && fs::exists(it->second.src)) {
      CompileResult hit = it->second;
      hit.cached = true;
      return hit;
    }
  }
  const fs::path dir = new_job_dir();
  CompileResult res;
  res.src = dir / ("prog" + toolchain_.source_ext);
  res.bin = dir / "prog";
  write_file(res.src.string(), source);
  if (trim(toolchain_.compile_cmd).empty()) {
    res.status = CompileStatus::Ok;
    res.bin = res.src;
  } else {
    ProcessLimits limits;
    limits.timeout_s = toolchain_.compile_timeout_s;
    limits.output_limit_bytes = 4u << 20;
    const auto pr = run_process(expand_template(toolchain_.compile_cmd, res.src, res.bin), "", limits, dir);
    res.seconds = pr.wall_ms / 1000.0;
    res.diagnostics = pr.err + pr.out;
    if (!pr.spawn_error.empty()) {
      res.status = CompileStatus::Error;
      res.diagnostics = pr.spawn_error;
    } else if (pr.timed_out) {
      res.status = CompileStatus::Timeout;
      res.diagnostics += "\ncompilation timed out after " + std::to_string(toolchain_.compile_timeout_s) + " s";
    } else if (pr.exit_code == 0 && fs::exists(res.bin)) {
      res.status = CompileStatus::Ok;
    } else {
      res.status = CompileStatus::Error;
    }
  }
  if (res.status != CompileStatus::Timeout) {
    std::lock_guard lock(cache_mu_);
    cache_[key] = res;
  }
  spdlog::debug("compile {} -> {} ({:.2f} s)", res.src.string(), to_string(res.status), res.seconds);
  return res;
}

ExecutionResult Sandbox::run(const CompileResult& handle, const std::string& input, int repetitions,
                             const std::string& input_id, double run_timeout_s) {
  if (repetitions < 1) throw Error(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  ExecutionResult r;
  r.input_id = input_id;
  r.compile = handle.status;
  r.compile_diagnostics = handle.diagnostics;
  if (handle.status != CompileStatus::Ok) return r;

  ProcessLimits limits;
  limits.timeout_s = run_timeout_s > 0 ? run_timeout_s : toolchain_.run_timeout_s;
  limits.output_limit_bytes = static_cast<std::size_t>(toolchain_.output_limit_kb) * 1024;
  limits.address_space_bytes = static_cast<std::size_t>(toolchain_.mem_limit_mb) << 20;
  limits.file_size_bytes = std::size_t{64} << 20;
  const auto argv = expand_template(toolchain_.run_cmd, handle.src, handle.bin);
  const fs::path cwd = handle.bin.parent_path();

  r.run = RunStatus::Ok;
  for (int rep = 0; rep < repetitions; ++rep) {
    const auto pr = run_process(argv, input, limits, cwd);
    r.wall_times_ms.push_back(pr.wall_ms);
    if (rep == 0) {
      r.stdout_text = pr.out;
      r.stderr_text = pr.err;
    } else if (pr.out != r.stdout_text) {
      r.nondeterministic = true;
    }
    if (!pr.spawn_error.empty()) {
      r.run = RunStatus::RuntimeError;
      r.run_detail = pr.spawn_error;
    } else if (pr.output_limited) {
      r.run = RunStatus::OutputLimit;
      r.run_detail = "stdout exceeded " + std::to_string(toolchain_.output_limit_kb) + " KB";
    } else if (pr.timed_out) {
      r.run = RunStatus::Timeout;
      r.run_detail = "exceeded " + std::to_string(limits.timeout_s) + " s";
    } else if (pr.term_signal != 0) {
      r.run = RunStatus::RuntimeError;
      r.run_detail = describe_signal(pr.term_signal);
    } else if (pr.exit_code != 0) {
      r.run = RunStatus::RuntimeError;
      r.run_detail = "exit code " + std::to_string(pr.exit_code);
    }
    if (r.run != RunStatus::Ok) {
      if (rep > 0) {
        r.stdout_text = pr.out;
        r.stderr_text = pr.err;
      }
      break;
    }
  }
  return r;
}

ExecutionResult Sandbox::compile_and_run(const std::string& source, const std::string& input,
                                         int repetitions, const std::string& input_id) {
  return run(compile(source), input, repetitions, input_id);
}

// ------------------------------------------------------------ measuring

ProgramMeasurement measure_program(Sandbox& sandbox, const std::string& source,
                                   const std::vector<TestCase>& tests, int repetitions,
                                   const OutputPolicy& policy) {
  if (tests.empty()) throw Error(ErrorKind::EmptyTestSet, "no test cases to measure against");
  ProgramMeasurement m;
  m.compile = sandbox.compile(source);
  if (m.compile.status != CompileStatus::Ok) return m;
  m.all_passed = true;
  for (const auto& t : tests) {
    TestRun tr;
    tr.test_id = t.id;
    tr.result = sandbox.run(m.compile, t.input, repetitions, t.id);
    tr.passed = tr.result.ran_ok() && judge_output(tr.result.stdout_text, t.expected, policy);
    m.total_ms += tr.result.median_ms();
    m.all_passed = m.all_passed && tr.passed;
    m.per_test.push_back(std::move(tr));
  }
  return m;
}

PairMeasurement measure_pair(Sandbox& sandbox, const std::string& slow_src, const std::string& fast_src,
                             const std::vector<TestCase>& tests, int repetitions,
                             const OutputPolicy& policy) {
  PairMeasurement pm;
  pm.slow = measure_program(sandbox, slow_src, tests, repetitions, policy);
  pm.fast = measure_program(sandbox, fast_src, tests, repetitions, policy);
  pm.slow_ms = pm.slow.total_ms;
  pm.fast_ms = pm.fast.total_ms;
  pm.fast_correct = pm.fast.all_passed;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (tests[i].status != TestStatus::Trusted) continue;
    const bool ok = i < pm.slow.per_test.size() && pm.slow.per_test[i].passed;
    if (!ok) {
      pm.slow_verified = false;
      std::string msg = "reference (slow) program fails trusted test '" + tests[i].id + "'";
      spdlog::error("{}", msg);
      pm.warnings.push_back(std::move(msg));
    }
  }
  return pm;
}

}  // namespace optbench

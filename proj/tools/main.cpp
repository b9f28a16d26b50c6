#include <iostream>
#include <new>

#include "cli.hpp"
#include "semdup/error.hpp"

int main(int argc, char** argv) {
  using namespace semdup;
  CLI::App app{"semdup: semantic-duplicate statistics for embedding corpora"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  cli::Runner run;
  cli::register_null(app, run);
  cli::register_nnstats(app, run);
  cli::register_keff(app, run);
  cli::register_fit(app, run);
  cli::register_simulate(app, run);
  cli::register_gen(app, run);

  std::string invocation;
  for (int i = 0; i < argc; ++i) invocation += (i ? " " : "") + std::string(argv[i]);
  cli::set_invocation(invocation);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = cli::expand_config(app, std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    run();
    return 0;
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const MismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

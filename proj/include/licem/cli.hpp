#pragma once

namespace licem {

// Entry point of the `licem` tool: ingest, annotate, train, eval, intervene,
// cace, explain, gradcheck. Returns 0 on success, 1 on domain errors, 2 on
// usage errors. Re-entrant so tests can drive subcommands in-process.
int run_cli(int argc, const char* const* argv);

} // namespace licem

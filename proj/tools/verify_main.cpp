#include "jitcert/cli.hpp"

int main(int argc, char** argv) { return jitcert::cli::run_main(argc, argv); }

#include <sparse_strike/cli.hpp>

int main(int argc, char **argv) { return sparse_strike::main_entry(argc, argv); }

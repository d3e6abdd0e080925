#include <wildscalar/cli.hpp>

int main(int argc, char** argv) { return wildscalar::dispatch(argc, argv, std::cout, std::cerr); }

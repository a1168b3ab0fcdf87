#include <csignal>

#include "kcm/experiment.hpp"

namespace
{
extern "C" void on_interrupt(int) { kcm::request_stop(); }
}

int main(int argc, char** argv)
{
    std::signal(SIGINT, on_interrupt);
    return kcm::cli_main(argc, argv);
}

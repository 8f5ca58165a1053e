#include <cstdio>

int main() {
    std::puts("dal: CLI not wired up yet");
    return 1;
}

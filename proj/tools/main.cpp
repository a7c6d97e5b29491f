#include <cstdio>

int main() {
    std::puts("ssfl: cli not wired yet");
    return 0;
}

#include <cstdio>

int main() {
    std::puts("diskbif: not yet implemented");
    return 2;
}

#include <iostream>

#include "cindex/cindex.hpp"

int main() {
    std::cout << "cindex CLI placeholder\n";
    return 0;
}

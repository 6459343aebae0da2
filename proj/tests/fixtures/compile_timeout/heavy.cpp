#include <cstdio>

constexpr unsigned long long spin() {
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned long long i = 0; i < 200000ULL; ++i)
        for (unsigned long long j = 0; j < 200000ULL; ++j) h = (h ^ (i * j)) * 1099511628211ULL;
    return h;
}

constexpr unsigned long long value = spin();

int main() {
    printf("%llu\n", value);
    return 0;
}

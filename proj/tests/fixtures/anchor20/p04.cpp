#include <cstdio>

int main() {
    long long n;
    if (scanf("%lld", &n) != 1 || n < 0) return 2;
    if (n == 0) return 0;
    long long acc = 1LL << 60;
    for (long long i = 0; i < n; ++i) {
        long long x;
        if (scanf("%lld", &x) != 1) return 3;
        if (x < acc) acc = x;
    }
    printf("%lld\n", acc);
    return 0;
}

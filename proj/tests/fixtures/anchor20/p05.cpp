#include <cstdio>

int main() {
    long long n;
    if (scanf("%lld", &n) != 1 || n < 0) return 2;
    if (n == 0) return 0;
    long long acc = 0;
    for (long long i = 0; i < n; ++i) {
        long long x;
        if (scanf("%lld", &x) != 1) return 3;
        if (x % 2 == 0) ++acc;
    }
    printf("%lld\n", acc);
    return 0;
}

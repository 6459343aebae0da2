#include <cstdio>
#include <vector>

std::vector<char> sieve(int n) {
    std::vector<char> comp(n + 1, 0);
    for (int p = 2; (long long)p * p <= n; ++p)
        if (!comp[p])
            for (int q = p * p; q <= n; q += p) comp[q] = 1;
    return comp;
}

int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    if (n < 2) {
        puts("0");
        return 0;
    }
    std::vector<char> c = sieve(n);
    int total = 0;
    for (int p = 2; p <= n; ++p) total += !c[p];
    printf("%d\n", total);
    return 0;
}

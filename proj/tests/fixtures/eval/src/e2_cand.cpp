#include <cstdio>
#include <algorithm>

static int a[20000];

int main() {
    int n;
    scanf("%d", &n);
    for (int i = 0; i < n; ++i) scanf("%d", &a[i]);
    std::sort(a, a + n)
    long long s = 0;
    for (int i = 0; i < n; ++i) s += (long long)a[i] * (n - 1 - i);
    printf("%lld\n", s);
    return 0;
}

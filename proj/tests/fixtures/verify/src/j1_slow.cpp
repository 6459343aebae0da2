// task: j1-slow
#include <cstdio>

long long v[100000];

int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    for (int i = 0; i < n; ++i) scanf("%lld", &v[i]);
    long long s = 0;
    for (int i = 0; i < n; ++i) s += v[i];
    printf("%lld\n", s);
    return 0;
}

// task: j2-cand
#include <cstdio>

long long v[100000];

int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    for (int i = 0; i < n; ++i) scanf("%lld", &v[i]);
    long long m = 0;
    for (int i = 0; i < n; ++i) if (v[i] > m) m = v[i];
    printf("%lld\n", m);
    return 0;
}

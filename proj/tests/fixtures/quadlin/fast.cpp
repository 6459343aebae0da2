#include <cstdio>

static int bit[1 << 16];
static int a[40000];

int main() {
    int n;
    if (scanf("%d", &n) != 1) return 1;
    for (int i = 0; i < n; ++i) scanf("%d", &a[i]);
    long long cnt = 0;
    for (int i = 0; i < n; ++i) {
        int v = a[i];
        for (int x = v; x > 0; x -= x & -x) cnt += bit[x];
        for (int x = v + 1; x < (1 << 16); x += x & -x) ++bit[x];
    }
    printf("%lld\n", cnt);
    return 0;
}

#include <stdio.h>

int main(void) {
    int arr[20] = {2, 4, 6, 8, 10};
    int n = 5;
    int pos = 2;
    int value = 5;
    int i;

    for (i = n; i > pos; i--) {
        arr[i] = arr[i - 1];
    }
    arr[pos] = value;
    n = n + 1;

    printf("array after insertion:\n");
    for (i = 0; i < n; i++) {
        printf("%d ", arr[i]);
    }
    printf("\n");
    return 0;
}

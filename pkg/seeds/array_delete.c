#include <stdio.h>

int main(void) {
    int arr[10] = {3, 7, 9, 11, 13, 15};
    int n = 6;
    int target = 9;
    int i;
    int found = -1;

    for (i = 0; i < n; i++) {
        if (arr[i] == target) {
            found = i;
            break;
        }
    }
    if (found < 0) {
        printf("element not found\n");
        return 1;
    }
    for (i = found; i < n - 1; i++) {
        arr[i] = arr[i + 1];
    }
    n = n - 1;

    printf("array after deletion:\n");
    for (i = 0; i < n; i++) {
        printf("%d ", arr[i]);
    }
    printf("\n");
    return 0;
}

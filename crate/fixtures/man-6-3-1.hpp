hppda 6 3 6 3 1 1 3
construction man 1
P
6 6
* - - - - -
- * - - - -
- - * - - -
- - - * - -
- - - - * -
- - - - - *
B
3 3
* 1 2
1 * 3
2 3 *
names 12 13 23

hppda 6 4 15 6 5 3 4
construction man 2
P
6 15
* * - - - -
* - * - - -
* - - * - -
* - - - * -
* - - - - *
- * * - - -
- * - * - -
- * - - * -
- * - - - *
- - * * - -
- - * - * -
- - * - - *
- - - * * -
- - - * - *
- - - - * *
B
4 6
* * 1 2
* 1 * 3
* 2 3 *
1 * * 4
2 * 4 *
3 4 * *
names 123 124 134 234
removal 1 2
